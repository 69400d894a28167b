// SPDX-License-Identifier: Apache-2.0
#include "salrl/reward.hpp"

#include <algorithm>
#include <stdexcept>

namespace salrl {

namespace {

void check_canvas(const BinaryMask& m, int w, int h, const char* op) {
  if (m.width != w || m.height != h) throw RasterError(std::string(op) + ": dimension mismatch");
}

}  // namespace

double correctness_sod(const std::vector<BinaryMask>& per_expression_masks, const GrayMask& gt) {
  if (per_expression_masks.empty())
    throw std::invalid_argument("correctness_sod: no masks supplied");
  for (const auto& m : per_expression_masks)
    check_canvas(m, gt.width, gt.height, "correctness_sod");
  BinaryMask merged = mask_union(per_expression_masks);
  return s_measure(merged.to_gray(), binarize(gt, kBinaryIngestThreshold));
}

double correctness_cosod(const std::vector<BinaryMask>& per_image_masks,
                         const std::vector<GrayMask>& gts) {
  if (per_image_masks.empty() || per_image_masks.size() != gts.size())
    throw std::invalid_argument("correctness_cosod: group length mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < gts.size(); ++k) {
    check_canvas(per_image_masks[k], gts[k].width, gts[k].height, "correctness_cosod");
    sum += s_measure(per_image_masks[k].to_gray(), binarize(gts[k], kBinaryIngestThreshold));
  }
  return sum / static_cast<double>(gts.size());
}

double iasm(const InstanceSet& pred, const InstanceSet& gt) {
  if (pred.empty() && gt.empty())
    throw std::invalid_argument("iasm: both instance sets empty, alignment undefined");
  int w = pred.empty() ? gt[0].width : pred[0].width;
  int h = pred.empty() ? gt[0].height : pred[0].height;
  for (const auto& m : pred) check_canvas(m, w, h, "iasm");
  for (const auto& m : gt) check_canvas(m, w, h, "iasm");

  const std::size_t ni = gt.size(), nm = pred.size();
  std::vector<char> gt_matched(ni, 0), pred_matched(nm, 0);
  std::vector<double> pair_scores;
  if (ni > 0 && nm > 0) {
    std::vector<std::vector<double>> u(ni, std::vector<double>(nm));
    for (std::size_t i = 0; i < ni; ++i)
      for (std::size_t j = 0; j < nm; ++j) u[i][j] = iou(gt[i], pred[j]);
    Assignment asg = hungarian_max(u);
    for (auto [i, j] : asg.pairs) {
      if (u[i][j] < kIasmTau) continue;  // filtered after optimization
      gt_matched[i] = 1;
      pred_matched[j] = 1;
      pair_scores.push_back(s_measure(pred[j].to_gray(), gt[i]));
    }
  }
  const BinaryMask zero = make_binary(w, h);
  for (std::size_t i = 0; i < ni; ++i)
    if (!gt_matched[i]) pair_scores.push_back(s_measure(zero.to_gray(), gt[i]));
  for (std::size_t j = 0; j < nm; ++j)
    if (!pred_matched[j]) pair_scores.push_back(s_measure(pred[j].to_gray(), zero));

  // Summing in sorted order makes the value independent of instance order.
  std::sort(pair_scores.begin(), pair_scores.end());
  double sum = 0.0;
  for (double s : pair_scores) sum += s;
  return sum / static_cast<double>(pair_scores.size());
}

RewardBreakdown total_reward(double r_corr, const FormatVerdict& verdict) {
  if (!(r_corr >= 0.0 && r_corr <= 1.0))
    throw std::invalid_argument("total_reward: r_corr outside [0,1]");
  RewardBreakdown b;
  b.r_corr = r_corr;
  b.r_fmt = verdict.total();
  b.lambda = 0.5;
  b.r_total = b.lambda * r_corr + (1.0 - b.lambda) * b.r_fmt;
  b.verdict = verdict;
  return b;
}

}  // namespace salrl
