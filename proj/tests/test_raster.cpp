// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "salrl/raster.hpp"

using namespace salrl;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST_CASE("mask constructors validate dimensions") {
  CHECK_THROWS_AS(make_gray(0, 4), RasterError);
  CHECK_THROWS_AS(make_gray(4, -1), RasterError);
  CHECK_THROWS_AS(make_gray(2, 2, std::vector<double>{0.0}), RasterError);
  CHECK_THROWS_AS(make_gray(2, 2, std::vector<double>{0, 0, 0, 1.5}), RasterError);
  CHECK_THROWS_AS(make_binary(2, 2, std::vector<std::uint8_t>{0, 1, 2, 0}), RasterError);
  GrayMask g = make_gray(3, 2, 0.5);
  CHECK(g.size() == 6);
  CHECK(g.at(1, 2) == 0.5);
}

TEST_CASE("pgm round trip is bit exact") {
  std::mt19937_64 rng(11);
  GrayMask g = make_gray(7, 5);
  for (double& v : g.values) v = static_cast<double>(rng() % 256) / 255.0;
  std::string path = temp_path("salrl_roundtrip.pgm");
  save_mask(g, path);
  GrayMask back = load_mask(path);
  REQUIRE(back.width == 7);
  REQUIRE(back.height == 5);
  for (int i = 0; i < g.size(); ++i) CHECK(back.values[i] == g.values[i]);
  std::remove(path.c_str());
}

TEST_CASE("binary mask round trip") {
  BinaryMask b = make_binary(4, 3);
  b.at(0, 0) = 1;
  b.at(2, 3) = 1;
  std::string path = temp_path("salrl_binary.pgm");
  save_mask(b, path);
  GrayMask back = load_mask(path);
  BinaryMask again = binarize(back, kBinaryIngestThreshold);
  CHECK(again.values == b.values);
  CHECK(again.foreground() == 2);
  std::remove(path.c_str());
}

TEST_CASE("pgm loader handles comments and whitespace") {
  std::string path = temp_path("salrl_comments.pgm");
  write_bytes(path,
              std::string("P5 # format\n# a comment line\n 2\t2 #dims\n255\n\x00\x40\x80\xff",
                          48));
  GrayMask g = load_mask(path);
  CHECK(g.width == 2);
  CHECK(g.height == 2);
  CHECK(g.at(0, 0) == 0.0);
  CHECK(g.at(1, 1) == 1.0);
  std::remove(path.c_str());
}

TEST_CASE("pgm loader rejects malformed input with byte offsets") {
  std::string path = temp_path("salrl_bad.pgm");

  write_bytes(path, "P2\n2 2\n255\n0 0 0 0\n");
  CHECK_THROWS_AS(load_mask(path), RasterError);

  write_bytes(path, std::string("P5\n2 2\n127\n\x00\x00\x00\x00", 15));
  CHECK_THROWS_AS(load_mask(path), RasterError);

  write_bytes(path, std::string("P5\n2 2\n255\n\x00\x00", 13));
  CHECK_THROWS_WITH_AS(load_mask(path), doctest::Contains("byte"), RasterError);

  write_bytes(path, "P5\n0 2\n255\n");
  CHECK_THROWS_AS(load_mask(path), RasterError);

  CHECK_THROWS_AS(load_mask(temp_path("salrl_missing_file.pgm")), RasterError);
  std::remove(path.c_str());
}

TEST_CASE("save quantizes by rounding") {
  GrayMask g = make_gray(2, 1);
  g.values = {0.4999 / 255.0, 0.5001 / 255.0};
  std::string path = temp_path("salrl_quant.pgm");
  save_mask(g, path);
  GrayMask back = load_mask(path);
  CHECK(back.values[0] == 0.0);
  CHECK(back.values[1] == 1.0 / 255.0);
  std::remove(path.c_str());
}

TEST_CASE("binarize uses a strict threshold") {
  GrayMask g = make_gray(3, 1);
  g.values = {0.5, 0.5001, 0.4999};
  BinaryMask b = binarize(g, 0.5);
  CHECK(b.values == std::vector<std::uint8_t>{0, 1, 0});
}

TEST_CASE("iou basics") {
  BinaryMask a = make_binary(4, 4);
  BinaryMask b = make_binary(4, 4);
  CHECK(iou(a, b) == 1.0);  // both empty
  a.at(0, 0) = 1;
  CHECK(iou(a, b) == 0.0);
  b.at(0, 0) = 1;
  CHECK(iou(a, b) == 1.0);
  b.at(0, 1) = 1;
  CHECK(iou(a, b) == doctest::Approx(0.5));
  BinaryMask c = make_binary(2, 2);
  CHECK_THROWS_AS(iou(a, c), RasterError);
}

TEST_CASE("mask union") {
  BinaryMask a = make_binary(2, 2, {1, 0, 0, 0});
  BinaryMask b = make_binary(2, 2, {0, 0, 0, 1});
  BinaryMask u = mask_union({a, b});
  CHECK(u.values == std::vector<std::uint8_t>{1, 0, 0, 1});
  CHECK_THROWS_AS(mask_union({}), RasterError);
  BinaryMask c = make_binary(3, 2);
  CHECK_THROWS_AS(mask_union({a, c}), RasterError);
}
