// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "salrl/cot.hpp"
#include "salrl/policy.hpp"
#include "salrl/raster.hpp"
#include "salrl/reward.hpp"

namespace salrl {

struct WorldConfig {
  std::uint64_t seed = 1;
  int entries = 8;           // lexicon size
  int grid = 32;             // canvas side, power of two >= 8
  int episodes_per_task = 2;
  int group_size = 4;        // K images per cosod group
  int max_length = 24;       // token horizon shared with the policy
};

// Text-to-mask dictionary acting as the referring segmenter.
struct Lexicon {
  int grid = 0;
  std::vector<std::string> texts;
  std::vector<BinaryMask> masks;  // index-aligned with texts

  const BinaryMask* find(const std::string& text) const;  // nullptr when absent
};

struct EpisodeSpec {
  int prompt = 0;
  std::string id;
  TaskKind task = TaskKind::sod;
  GrayMask sod_gt;                 // task == sod
  InstanceSet sis_gt;              // task == sis, canonical order
  std::vector<GrayMask> cosod_gt;  // task == cosod, K entries
  std::vector<int> golden_tokens;  // ends with eos
  std::string golden_text;
};

struct World {
  WorldConfig config;
  Lexicon lexicon;
  Vocabulary vocab;
  std::vector<EpisodeSpec> episodes;
};

// Deterministic in the seed. Lexicon masks are axis-aligned rectangles kept
// pairwise at IoU <= 0.3 by rejection sampling; every golden sequence is
// verified to score a total reward of exactly 1.0 before the world is
// returned.
World build_world(const WorldConfig& config);

// Exact trimmed-text lookup; the semantic flag does not affect the result.
// Unknown text yields the all-zero mask.
BinaryMask oracle_segment(const Lexicon& lexicon, const ReferringExpression& expr);

// Full scoring path: parse, format verdict, oracle segmentation, task
// correctness, weighted total. Structural parse failure zeroes r_corr.
RewardBreakdown score_response(const World& world, const EpisodeSpec& episode,
                               const std::string& raw);

// manifest.json plus one PGM per lexicon entry and per episode ground truth.
void dump_world(const World& world, const std::string& out_dir);

}  // namespace salrl
