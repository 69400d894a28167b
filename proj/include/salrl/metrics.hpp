// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "salrl/raster.hpp"

namespace salrl {

// Result of a maximum-value one-to-one assignment.
struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), rows/cols pairwise distinct
  double total_value = 0.0;                // sum of matrix entries at the pairs
};

struct ScoredMask {
  BinaryMask mask;
  double score = 1.0;  // ranking confidence in [0,1]
};

struct MetricReport {
  double s_measure = 0.0;
  double e_measure = 0.0;
  double f_beta_max = 0.0;
  double mae = 0.0;
  std::map<double, double> ap;  // IoU threshold -> average precision
};

// Structure measure: 0.5*object term + 0.5*region term, with degenerate
// rules for empty/full ground truth. Inputs must share dimensions.
double s_measure(const GrayMask& pred, const BinaryMask& gt);

// Enhanced-alignment measure: max over the 256-threshold binarization sweep.
double e_measure(const GrayMask& pred, const BinaryMask& gt);

// Max F-beta (beta^2 = 0.3) over thresholds k/255, k = 0..255. An all-zero gt
// yields 0; when `diagnostic` is non-null a note explaining why is stored.
double f_measure_max(const GrayMask& pred, const BinaryMask& gt,
                     std::string* diagnostic = nullptr);

// Mean absolute pixel error.
double mae(const GrayMask& pred, const GrayMask& gt);

// Exact max-total assignment for a rectangular matrix of values (rows x cols).
// Rectangles are zero-padded to square internally; padded pairs are removed,
// so the result always has min(rows, cols) pairs.
Assignment hungarian_max(const std::vector<std::vector<double>>& values);

// Ranked greedy matching at the given IoU threshold, then area under the
// precision envelope over recall (all-point interpolation). Predictions are
// stably sorted by descending score. Zero when either side is empty.
double average_precision(const std::vector<ScoredMask>& preds,
                         const std::vector<BinaryMask>& gts, double iou_threshold);

}  // namespace salrl
