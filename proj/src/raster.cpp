// SPDX-License-Identifier: Apache-2.0
#include "salrl/raster.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace salrl {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1)
    throw RasterError("mask dimensions must be positive, got " + std::to_string(width) + "x" +
                      std::to_string(height));
}

std::string offset_msg(const std::string& what, std::size_t offset) {
  return what + " (byte offset " + std::to_string(offset) + ")";
}

}  // namespace

long BinaryMask::foreground() const {
  long n = 0;
  for (auto v : values) n += v;
  return n;
}

GrayMask BinaryMask::to_gray() const {
  GrayMask g;
  g.width = width;
  g.height = height;
  g.values.reserve(values.size());
  for (auto v : values) g.values.push_back(v ? 1.0 : 0.0);
  return g;
}

GrayMask make_gray(int width, int height, std::vector<double> values) {
  check_dims(width, height);
  if (values.size() != static_cast<size_t>(width) * height)
    throw RasterError("value count does not match dimensions");
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0)) throw RasterError("gray value outside [0,1]");
  return GrayMask{width, height, std::move(values)};
}

GrayMask make_gray(int width, int height, double fill) {
  check_dims(width, height);
  if (!(fill >= 0.0 && fill <= 1.0)) throw RasterError("gray value outside [0,1]");
  return GrayMask{width, height, std::vector<double>(static_cast<size_t>(width) * height, fill)};
}

BinaryMask make_binary(int width, int height, std::vector<std::uint8_t> values) {
  check_dims(width, height);
  if (values.size() != static_cast<size_t>(width) * height)
    throw RasterError("value count does not match dimensions");
  for (auto v : values)
    if (v > 1) throw RasterError("binary value must be 0 or 1");
  return BinaryMask{width, height, std::move(values)};
}

BinaryMask make_binary(int width, int height) {
  check_dims(width, height);
  return BinaryMask{width, height,
                    std::vector<std::uint8_t>(static_cast<size_t>(width) * height, 0)};
}

namespace {

// PGM header scanner tracking byte offsets for error reports. Whitespace and
// '#' comments may separate header fields.
struct PgmScanner {
  const std::string& data;
  std::size_t pos = 0;

  void skip_separators() {
    while (pos < data.size()) {
      char c = data[pos];
      if (c == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f') {
        ++pos;
      } else {
        break;
      }
    }
  }

  long read_int(const char* field) {
    skip_separators();
    std::size_t start = pos;
    if (pos >= data.size())
      throw RasterError(offset_msg(std::string("malformed header: missing ") + field, pos));
    long value = 0;
    while (pos < data.size() && data[pos] >= '0' && data[pos] <= '9') {
      value = value * 10 + (data[pos] - '0');
      if (value > 1'000'000'000)
        throw RasterError(offset_msg(std::string("malformed header: ") + field + " too large", start));
      ++pos;
    }
    if (pos == start)
      throw RasterError(offset_msg(std::string("malformed header: ") + field + " is not a number", pos));
    return value;
  }
};

}  // namespace

GrayMask load_mask(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RasterError("missing file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();

  if (data.size() < 2 || data[0] != 'P' || data[1] != '5') {
    throw RasterError(offset_msg("unsupported format: expected magic \"P5\" in " + path, 0));
  }
  PgmScanner sc{data, 2};
  long width = sc.read_int("width");
  long height = sc.read_int("height");
  std::size_t maxval_at = sc.pos;
  long maxval = sc.read_int("maxval");
  if (width < 1 || height < 1)
    throw RasterError(offset_msg("malformed header: non-positive dimensions in " + path, 2));
  if (maxval != 255)
    throw RasterError(offset_msg("maxval must be 255, got " + std::to_string(maxval) + " in " + path,
                                 maxval_at));
  if (sc.pos >= data.size())
    throw RasterError(offset_msg("truncated payload in " + path, data.size()));
  ++sc.pos;  // exactly one separator byte after maxval

  const std::size_t expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (data.size() - sc.pos < expected)
    throw RasterError(offset_msg("truncated payload in " + path + ": expected " +
                                     std::to_string(expected) + " bytes, got " +
                                     std::to_string(data.size() - sc.pos),
                                 data.size()));

  GrayMask mask;
  mask.width = static_cast<int>(width);
  mask.height = static_cast<int>(height);
  mask.values.reserve(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    mask.values.push_back(static_cast<unsigned char>(data[sc.pos + i]) / 255.0);
  }
  return mask;
}

void save_mask(const GrayMask& mask, const std::string& path) {
  check_dims(mask.width, mask.height);
  if (mask.values.size() != static_cast<size_t>(mask.width) * mask.height)
    throw RasterError("value count does not match dimensions");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RasterError("cannot open for writing: " + path);
  out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
  std::string payload;
  payload.reserve(mask.values.size());
  for (double v : mask.values) {
    int b = static_cast<int>(std::floor(v * 255.0 + 0.5));
    if (b < 0) b = 0;
    if (b > 255) b = 255;
    payload.push_back(static_cast<char>(static_cast<unsigned char>(b)));
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw RasterError("write failed: " + path);
}

void save_mask(const BinaryMask& mask, const std::string& path) { save_mask(mask.to_gray(), path); }

BinaryMask binarize(const GrayMask& mask, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw RasterError("threshold outside [0,1]");
  BinaryMask out;
  out.width = mask.width;
  out.height = mask.height;
  out.values.reserve(mask.values.size());
  for (double v : mask.values) out.values.push_back(v > threshold ? 1 : 0);
  return out;
}

BinaryMask mask_union(const std::vector<BinaryMask>& masks) {
  if (masks.empty()) throw RasterError("union of an empty mask list");
  BinaryMask out = masks.front();
  for (std::size_t i = 1; i < masks.size(); ++i) {
    const BinaryMask& m = masks[i];
    if (m.width != out.width || m.height != out.height)
      throw RasterError("union dimension mismatch");
    for (std::size_t p = 0; p < out.values.size(); ++p)
      out.values[p] = out.values[p] | m.values[p];
  }
  return out;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.width != b.width || a.height != b.height) throw RasterError("iou dimension mismatch");
  long inter = 0, uni = 0;
  for (std::size_t p = 0; p < a.values.size(); ++p) {
    inter += a.values[p] & b.values[p];
    uni += a.values[p] | b.values[p];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace salrl
