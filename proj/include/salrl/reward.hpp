// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "salrl/cot.hpp"
#include "salrl/metrics.hpp"
#include "salrl/raster.hpp"

namespace salrl {

// Instance masks share one canvas size; the list itself may be empty.
using InstanceSet = std::vector<BinaryMask>;

struct RewardBreakdown {
  double r_corr = 0.0;
  double r_fmt = 0.0;  // in {0, 0.5, 1.0}
  double lambda = 0.5;
  double r_total = 0.0;
  FormatVerdict verdict;
};

// Matched pairs below this IoU are dropped after the assignment is optimized.
inline constexpr double kIasmTau = 0.1;

// S-measure of the union of per-expression masks against the saliency map.
double correctness_sod(const std::vector<BinaryMask>& per_expression_masks, const GrayMask& gt);

// Mean S-measure across the K group images.
double correctness_cosod(const std::vector<BinaryMask>& per_image_masks,
                         const std::vector<GrayMask>& gts);

// Instance-aligned S-measure: Hungarian-match predictions to ground truths by
// IoU, drop pairs under kIasmTau, pair every leftover instance with a zero
// mask, and average S-measure over the resulting alignment.
double iasm(const InstanceSet& pred, const InstanceSet& gt);

RewardBreakdown total_reward(double r_corr, const FormatVerdict& verdict);

}  // namespace salrl
