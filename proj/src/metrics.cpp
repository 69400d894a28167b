// SPDX-License-Identifier: Apache-2.0
#include "salrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace salrl {

namespace {

void check_same_dims(int aw, int ah, int bw, int bh, const char* op) {
  if (aw != bw || ah != bh) throw RasterError(std::string(op) + ": dimension mismatch");
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() <= 1) return 0.0;
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

// Object-level similarity of a region's values against an ideal constant 1.
// Denominator is >= 1, so it needs no epsilon guard.
double object_score(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double m = mean_of(xs);
  double s = sample_std(xs, m);
  return 2.0 * m / (m * m + 1.0 + s);
}

double s_object(const GrayMask& pred, const BinaryMask& gt) {
  std::vector<double> fg, bg;
  fg.reserve(pred.values.size());
  bg.reserve(pred.values.size());
  for (std::size_t p = 0; p < pred.values.size(); ++p) {
    if (gt.values[p])
      fg.push_back(pred.values[p]);
    else
      bg.push_back(1.0 - pred.values[p]);
  }
  double mu = static_cast<double>(gt.foreground()) / static_cast<double>(gt.size());
  return mu * object_score(fg) + (1.0 - mu) * object_score(bg);
}

// SSIM of one block. Exact-zero special cases instead of an epsilon so that a
// block compared against itself scores exactly 1.
double block_ssim(const GrayMask& pred, const BinaryMask& gt, int r0, int r1, int c0, int c1) {
  long n = static_cast<long>(r1 - r0) * (c1 - c0);
  if (n <= 0) return 1.0;  // empty block carries zero weight
  double sx = 0.0, sy = 0.0;
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) {
      sx += pred.at(r, c);
      sy += gt.at(r, c);
    }
  double mx = sx / static_cast<double>(n);
  double my = sy / static_cast<double>(n);
  double vx = 0.0, vy = 0.0, cxy = 0.0;
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) {
      double dx = pred.at(r, c) - mx;
      double dy = gt.at(r, c) - my;
      vx += dx * dx;
      vy += dy * dy;
      cxy += dx * dy;
    }
  double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  vx /= denom;
  vy /= denom;
  cxy /= denom;
  double alpha = 4.0 * mx * my * cxy;
  double beta = (mx * mx + my * my) * (vx + vy);
  if (alpha != 0.0) return alpha / beta;
  return beta == 0.0 ? 1.0 : 0.0;
}

double s_region(const GrayMask& pred, const BinaryMask& gt) {
  // Foreground centroid, 1-based components = floor(mean coordinate) + 1.
  long count = 0, sum_r = 0, sum_c = 0;
  for (int r = 0; r < gt.height; ++r)
    for (int c = 0; c < gt.width; ++c)
      if (gt.at(r, c)) {
        ++count;
        sum_r += r;
        sum_c += c;
      }
  int cy = static_cast<int>(sum_r / count) + 1;
  int cx = static_cast<int>(sum_c / count) + 1;

  double area = static_cast<double>(gt.size());
  double w1 = static_cast<double>(cx) * cy / area;
  double w2 = static_cast<double>(gt.width - cx) * cy / area;
  double w3 = static_cast<double>(cx) * (gt.height - cy) / area;
  double w4 = 1.0 - w1 - w2 - w3;

  double q1 = block_ssim(pred, gt, 0, cy, 0, cx);
  double q2 = block_ssim(pred, gt, 0, cy, cx, gt.width);
  double q3 = block_ssim(pred, gt, cy, gt.height, 0, cx);
  double q4 = block_ssim(pred, gt, cy, gt.height, cx, gt.width);
  return w1 * q1 + w2 * q2 + w3 * q3 + w4 * q4;
}

}  // namespace

double s_measure(const GrayMask& pred, const BinaryMask& gt) {
  check_same_dims(pred.width, pred.height, gt.width, gt.height, "s_measure");
  long fg = gt.foreground();
  if (fg == 0) return 1.0 - mean_of(pred.values);
  if (fg == gt.size()) return mean_of(pred.values);
  double s = 0.5 * s_object(pred, gt) + 0.5 * s_region(pred, gt);
  return std::clamp(s, 0.0, 1.0);
}

double e_measure(const GrayMask& pred, const BinaryMask& gt) {
  check_same_dims(pred.width, pred.height, gt.width, gt.height, "e_measure");
  const long n = gt.size();
  const long fg = gt.foreground();
  const double g_mean = static_cast<double>(fg) / static_cast<double>(n);
  double best = 0.0;
  for (int k = 0; k < 256; ++k) {
    const double th = k / 255.0;
    long bin_fg = 0;
    for (double v : pred.values) bin_fg += v > th ? 1 : 0;
    double sum = 0.0;
    if (fg == 0) {
      sum = static_cast<double>(n - bin_fg);  // enhanced = 1 - binpred
    } else if (fg == n) {
      sum = static_cast<double>(bin_fg);  // enhanced = binpred
    } else {
      const double b_mean = static_cast<double>(bin_fg) / static_cast<double>(n);
      for (std::size_t p = 0; p < pred.values.size(); ++p) {
        double dg = (gt.values[p] ? 1.0 : 0.0) - g_mean;
        double db = (pred.values[p] > th ? 1.0 : 0.0) - b_mean;
        double xi = 2.0 * dg * db / (dg * dg + db * db + 1e-8);
        sum += (xi + 1.0) * (xi + 1.0) / 4.0;
      }
    }
    double score = sum / (static_cast<double>(n) - 1.0 + 1e-8);
    best = std::max(best, score);
  }
  return std::clamp(best, 0.0, 1.0);
}

double f_measure_max(const GrayMask& pred, const BinaryMask& gt, std::string* diagnostic) {
  check_same_dims(pred.width, pred.height, gt.width, gt.height, "f_measure_max");
  const long gt_pos = gt.foreground();
  if (gt_pos == 0) {
    if (diagnostic) *diagnostic = "gt all-zero: precision/recall undefined, score fixed at 0";
    return 0.0;
  }
  constexpr double beta2 = 0.3;
  double best = 0.0;
  for (int k = 0; k < 256; ++k) {
    const double th = k / 255.0;
    long tp = 0, pred_pos = 0;
    for (std::size_t p = 0; p < pred.values.size(); ++p) {
      if (pred.values[p] > th) {
        ++pred_pos;
        tp += gt.values[p];
      }
    }
    if (pred_pos == 0) continue;  // zero-denominator threshold contributes 0
    double prec = static_cast<double>(tp) / static_cast<double>(pred_pos);
    double rec = static_cast<double>(tp) / static_cast<double>(gt_pos);
    double denom = beta2 * prec + rec;
    if (denom == 0.0) continue;
    best = std::max(best, (1.0 + beta2) * prec * rec / denom);
  }
  return best;
}

double mae(const GrayMask& pred, const GrayMask& gt) {
  check_same_dims(pred.width, pred.height, gt.width, gt.height, "mae");
  double s = 0.0;
  for (std::size_t p = 0; p < pred.values.size(); ++p)
    s += std::abs(pred.values[p] - gt.values[p]);
  return s / static_cast<double>(pred.values.size());
}

Assignment hungarian_max(const std::vector<std::vector<double>>& values) {
  const int rows = static_cast<int>(values.size());
  if (rows == 0) throw std::invalid_argument("hungarian_max: empty matrix");
  const int cols = static_cast<int>(values[0].size());
  if (cols == 0) throw std::invalid_argument("hungarian_max: empty matrix");
  for (const auto& row : values) {
    if (static_cast<int>(row.size()) != cols)
      throw std::invalid_argument("hungarian_max: ragged matrix");
    for (double v : row)
      if (!std::isfinite(v)) throw std::invalid_argument("hungarian_max: non-finite entry");
  }

  // Min-cost assignment with potentials on the negated, zero-padded matrix.
  const int n = std::max(rows, cols);
  auto cost = [&](int i, int j) -> double {
    return (i < rows && j < cols) ? -values[i][j] : 0.0;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  Assignment out;
  for (int j = 1; j <= n; ++j) {
    int i = p[j];
    if (i >= 1 && i <= rows && j <= cols) out.pairs.emplace_back(i - 1, j - 1);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (auto [r, c] : out.pairs) out.total_value += values[r][c];
  return out;
}

double average_precision(const std::vector<ScoredMask>& preds,
                         const std::vector<BinaryMask>& gts, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
    throw std::invalid_argument("average_precision: threshold outside (0,1]");
  if (preds.empty() || gts.empty()) return 0.0;
  const int w = gts[0].width, h = gts[0].height;
  for (const auto& g : gts) check_same_dims(g.width, g.height, w, h, "average_precision");
  for (const auto& p : preds) check_same_dims(p.mask.width, p.mask.height, w, h, "average_precision");

  std::vector<int> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return preds[a].score > preds[b].score; });

  std::vector<char> gt_used(gts.size(), 0);
  std::vector<char> is_tp(order.size(), 0);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const BinaryMask& pm = preds[order[rank]].mask;
    int best_gt = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[g]) continue;
      double v = iou(pm, gts[g]);
      if (v > best_iou) {
        best_iou = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0 && best_iou >= iou_threshold) {
      gt_used[best_gt] = 1;
      is_tp[rank] = 1;
    }
  }

  const std::size_t npred = order.size();
  std::vector<double> prec(npred), rec(npred);
  long tp = 0;
  for (std::size_t k = 0; k < npred; ++k) {
    tp += is_tp[k];
    prec[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    rec[k] = static_cast<double>(tp) / static_cast<double>(gts.size());
  }
  std::vector<double> env(npred);
  double run = 0.0;
  for (std::size_t k = npred; k-- > 0;) {
    run = std::max(run, prec[k]);
    env[k] = run;
  }
  double ap = 0.0, prev_rec = 0.0;
  for (std::size_t k = 0; k < npred; ++k) {
    if (rec[k] > prev_rec) {
      ap += (rec[k] - prev_rec) * env[k];
      prev_rec = rec[k];
    }
  }
  return ap;
}

}  // namespace salrl
