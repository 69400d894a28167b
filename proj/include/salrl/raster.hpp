// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace salrl {

// Row-major raster map with unit-interval intensities.
struct GrayMask {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // size = width * height, each in [0,1]

  double at(int row, int col) const { return values[static_cast<size_t>(row) * width + col]; }
  double& at(int row, int col) { return values[static_cast<size_t>(row) * width + col]; }
  int size() const { return width * height; }
};

// Row-major raster map over {0,1}.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;  // size = width * height, each 0 or 1

  std::uint8_t at(int row, int col) const { return values[static_cast<size_t>(row) * width + col]; }
  std::uint8_t& at(int row, int col) { return values[static_cast<size_t>(row) * width + col]; }
  int size() const { return width * height; }
  long foreground() const;
  GrayMask to_gray() const;
};

class RasterError : public std::runtime_error {
 public:
  explicit RasterError(const std::string& what) : std::runtime_error(what) {}
};

GrayMask make_gray(int width, int height, std::vector<double> values);
GrayMask make_gray(int width, int height, double fill = 0.0);
BinaryMask make_binary(int width, int height, std::vector<std::uint8_t> values);
BinaryMask make_binary(int width, int height);

// Threshold used when a stored gray map is ingested as a binary mask
// ({0,255} bytes separate cleanly at this value).
inline constexpr double kBinaryIngestThreshold = 128.0 / 255.0;

// Binary PGM ("P5", maxval 255) I/O. Bytes map to b/255 on load; on save a
// value v is quantized to floor(v*255 + 0.5), so {0,1} masks round-trip
// exactly. Errors carry the byte offset of the offending input.
GrayMask load_mask(const std::string& path);
void save_mask(const GrayMask& mask, const std::string& path);
void save_mask(const BinaryMask& mask, const std::string& path);

// 1 iff value > threshold (strict).
BinaryMask binarize(const GrayMask& mask, double threshold);

// Pixel-wise OR over a nonempty list of same-shaped masks.
BinaryMask mask_union(const std::vector<BinaryMask>& masks);

// |a ∩ b| / |a ∪ b|; 1.0 when both masks are empty.
double iou(const BinaryMask& a, const BinaryMask& b);

}  // namespace salrl
