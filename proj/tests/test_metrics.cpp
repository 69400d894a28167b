// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "salrl/metrics.hpp"
#include "salrl/raster.hpp"

using namespace salrl;

namespace {

BinaryMask left_half(int n) {
  BinaryMask m = make_binary(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n / 2; ++c) m.at(r, c) = 1;
  return m;
}

BinaryMask random_binary(int w, int h, std::mt19937_64& rng) {
  BinaryMask m = make_binary(w, h);
  for (auto& v : m.values) v = rng() % 2;
  return m;
}

GrayMask random_gray(int w, int h, std::mt19937_64& rng) {
  GrayMask m = make_gray(w, h);
  for (auto& v : m.values) v = static_cast<double>(rng() % 256) / 255.0;
  return m;
}

// Exhaustive max-assignment by recursion, used as a reference.
double brute_force_best(const std::vector<std::vector<double>>& values) {
  int rows = static_cast<int>(values.size());
  int cols = static_cast<int>(values[0].size());
  bool transpose = rows > cols;
  int small = transpose ? cols : rows;
  int large = transpose ? rows : cols;
  std::vector<int> chosen;
  std::vector<bool> used(large, false);
  double best = -1e18;
  auto value_at = [&](int i, int j) { return transpose ? values[j][i] : values[i][j]; };
  auto rec = [&](auto&& self, int i, double acc) -> void {
    if (i == small) {
      best = std::max(best, acc);
      return;
    }
    for (int j = 0; j < large; ++j) {
      if (used[j]) continue;
      used[j] = true;
      self(self, i + 1, acc + value_at(i, j));
      used[j] = false;
    }
  };
  rec(rec, 0, 0.0);
  return best;
}

}  // namespace

TEST_CASE("s-measure equals one on identical masks") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    BinaryMask g = random_binary(16, 16, rng);
    if (g.foreground() == 0 || g.foreground() == g.size()) continue;
    CHECK(s_measure(g.to_gray(), g) == 1.0);
  }
}

TEST_CASE("s-measure degenerate ground truths") {
  GrayMask pred = make_gray(8, 8, 0.3);
  BinaryMask empty = make_binary(8, 8);
  CHECK(s_measure(pred, empty) == doctest::Approx(0.7).epsilon(1e-12));
  BinaryMask full = make_binary(8, 8);
  for (auto& v : full.values) v = 1;
  CHECK(s_measure(pred, full) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("s-measure half-plane pins") {
  BinaryMask gt = left_half(8);
  CHECK(std::abs(s_measure(make_gray(8, 8, 0.5), gt) - 0.525) <= 1e-9);
  CHECK(std::abs(s_measure(make_gray(8, 8, 0.0), gt) - 0.375) <= 1e-9);
}

TEST_CASE("s-measure output range and dimension checks") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    GrayMask pred = random_gray(9, 7, rng);
    BinaryMask gt = random_binary(9, 7, rng);
    double s = s_measure(pred, gt);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
  CHECK_THROWS_AS(s_measure(make_gray(4, 4), make_binary(5, 4)), RasterError);
}

TEST_CASE("e-measure pins") {
  BinaryMask gt = left_half(8);
  GrayMask right = make_gray(8, 8);
  for (int r = 0; r < 8; ++r)
    for (int c = 4; c < 8; ++c) right.at(r, c) = 1.0;
  CHECK(e_measure(right, gt) == 16.0 / (63.0 + 1e-8));
  CHECK(e_measure(gt.to_gray(), gt) == doctest::Approx(1.0).epsilon(1e-6));
  GrayMask pred = make_gray(8, 8, 0.4);
  BinaryMask empty = make_binary(8, 8);
  double e = e_measure(pred, empty);
  CHECK(e >= 0.0);
  CHECK(e <= 1.0);
}

TEST_CASE("e-measure range on random inputs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    double e = e_measure(random_gray(6, 11, rng), random_binary(6, 11, rng));
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
  }
}

TEST_CASE("max f-measure on a half-right prediction") {
  // gt has 4 pixels; prediction hits 2 of them plus 2 background pixels.
  BinaryMask gt = make_binary(4, 4);
  gt.at(0, 0) = gt.at(0, 1) = gt.at(1, 0) = gt.at(1, 1) = 1;
  GrayMask pred = make_gray(4, 4);
  pred.at(0, 0) = pred.at(0, 1) = 1.0;
  pred.at(3, 2) = pred.at(3, 3) = 1.0;
  CHECK(f_measure_max(pred, gt) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("max f-measure dominates any single threshold and flags empty gt") {
  std::mt19937_64 rng(8);
  BinaryMask gt = random_binary(8, 8, rng);
  while (gt.foreground() == 0) gt = random_binary(8, 8, rng);
  GrayMask pred = random_gray(8, 8, rng);
  double fmax = f_measure_max(pred, gt);
  for (int k = 0; k <= 255; k += 17) {
    BinaryMask bin = binarize(pred, static_cast<double>(k) / 255.0);
    long tp = 0;
    for (int i = 0; i < bin.size(); ++i) tp += bin.values[i] && gt.values[i];
    if (bin.foreground() == 0) continue;
    double prec = static_cast<double>(tp) / static_cast<double>(bin.foreground());
    double rec = static_cast<double>(tp) / static_cast<double>(gt.foreground());
    double denom = 0.3 * prec + rec;
    double f = denom == 0.0 ? 0.0 : 1.3 * prec * rec / denom;
    CHECK(fmax >= f - 1e-12);
  }

  std::string note;
  CHECK(f_measure_max(pred, make_binary(8, 8), &note) == 0.0);
  CHECK(!note.empty());
}

TEST_CASE("mae basics") {
  CHECK(mae(make_gray(4, 4, 0.25), make_gray(4, 4, 0.0)) == doctest::Approx(0.25).epsilon(1e-15));
  std::mt19937_64 rng(9);
  GrayMask a = random_gray(5, 5, rng);
  GrayMask b = random_gray(5, 5, rng);
  CHECK(mae(a, a) == 0.0);
  CHECK(mae(a, b) == mae(b, a));
  CHECK_THROWS_AS(mae(a, make_gray(4, 5)), RasterError);
}

TEST_CASE("hungarian fixed examples") {
  Assignment one = hungarian_max({{0.9}});
  CHECK(one.total_value == doctest::Approx(0.9).epsilon(1e-15));
  REQUIRE(one.pairs.size() == 1);
  CHECK(one.pairs[0] == std::pair<int, int>{0, 0});

  Assignment two = hungarian_max({{0.9, 0.1}, {0.8, 0.7}});
  CHECK(two.total_value == doctest::Approx(1.6).epsilon(1e-12));
  REQUIRE(two.pairs.size() == 2);
  CHECK(two.pairs[0] == std::pair<int, int>{0, 0});
  CHECK(two.pairs[1] == std::pair<int, int>{1, 1});

  Assignment rect = hungarian_max({{0.5, 0.9}, {0.9, 0.5}, {0.1, 0.1}});
  CHECK(rect.total_value == doctest::Approx(1.8).epsilon(1e-12));
  REQUIRE(rect.pairs.size() == 2);
  CHECK(rect.pairs[0] == std::pair<int, int>{0, 1});
  CHECK(rect.pairs[1] == std::pair<int, int>{1, 0});
}

TEST_CASE("hungarian argument validation") {
  CHECK_THROWS_AS(hungarian_max({}), std::invalid_argument);
  CHECK_THROWS_AS(hungarian_max({{}}), std::invalid_argument);
  CHECK_THROWS_AS(hungarian_max({{0.1, 0.2}, {0.3}}), std::invalid_argument);
  CHECK_THROWS_AS(hungarian_max({{0.1, std::nan("")}}), std::invalid_argument);
}

TEST_CASE("hungarian matches brute force on random matrices") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    int rows = 1 + static_cast<int>(rng() % 5);
    int cols = 1 + static_cast<int>(rng() % 5);
    std::vector<std::vector<double>> m(rows, std::vector<double>(cols));
    for (auto& row : m)
      for (auto& v : row) v = static_cast<double>(rng() % 1000) / 999.0;
    Assignment a = hungarian_max(m);
    CHECK(a.total_value == doctest::Approx(brute_force_best(m)).epsilon(1e-9));
    CHECK(a.pairs.size() == static_cast<std::size_t>(std::min(rows, cols)));
    double recomputed = 0.0;
    for (auto [i, j] : a.pairs) recomputed += m[i][j];
    CHECK(a.total_value == doctest::Approx(recomputed).epsilon(1e-12));
  }
}

TEST_CASE("average precision fixed examples") {
  BinaryMask gt = make_binary(8, 8);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) gt.at(r, c) = 1;
  BinaryMask miss = make_binary(8, 8);
  for (int r = 5; r < 8; ++r)
    for (int c = 5; c < 8; ++c) miss.at(r, c) = 1;

  // Exact hit ranked first: precision 1 at recall 1.
  CHECK(average_precision({{gt, 0.9}, {miss, 0.8}}, {gt}, 0.5) == 1.0);
  // False positive ranked first: the hit arrives at precision 1/2.
  CHECK(average_precision({{miss, 0.9}, {gt, 0.8}}, {gt}, 0.5) == doctest::Approx(0.5));
  CHECK(average_precision({}, {gt}, 0.5) == 0.0);
  CHECK(average_precision({{gt, 0.9}}, {}, 0.5) == 0.0);
  CHECK_THROWS_AS(average_precision({{gt, 0.9}}, {gt}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(average_precision({{gt, 0.9}}, {gt}, 1.5), std::invalid_argument);
}

TEST_CASE("average precision respects the iou threshold") {
  BinaryMask gt = make_binary(8, 8);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) gt.at(r, c) = 1;
  BinaryMask partial = make_binary(8, 8);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 3; ++c) partial.at(r, c) = 1;  // IoU 12/16 = 0.75
  CHECK(average_precision({{partial, 0.9}}, {gt}, 0.7) == 1.0);
  CHECK(average_precision({{partial, 0.9}}, {gt}, 0.8) == 0.0);
}
