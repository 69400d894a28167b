// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "salrl/cot.hpp"
#include "salrl/optimize.hpp"
#include "salrl/world.hpp"

namespace salrl {

// Command entry points shared by the CLI binary and the tests. Fatal problems
// surface as exceptions; the binary maps them to exit code 1.

struct EvalArgs {
  std::string pred_dir;
  std::string gt_dir;
  TaskKind task = TaskKind::sod;
  std::string out_path;
};
void cmd_eval(const EvalArgs& args);

struct RewardArgs {
  std::string responses_path;
  std::string out_path;
  bool use_adapter = false;
  WorldConfig world;    // oracle mode: episodes looked up by id in this world
  std::string gt_dir;   // adapter mode ground truth layout
  std::string adapter_dir;
  int timeout_ms = 2000;
};
void cmd_reward(const RewardArgs& args);

struct ParseArgs {
  std::string responses_path;
  TaskKind task = TaskKind::sod;
  std::string out_dir;  // expressions.jsonl + summary.json
};
void cmd_parse(const ParseArgs& args);

struct TrainArgs {
  std::string config_path;
  std::string out_dir;  // report.jsonl + summary.json + policy.ckpt
  std::optional<std::uint64_t> seed;
};
void cmd_train(const TrainArgs& args);

struct AnalyzeArgs {
  std::string checkpoint_path;
  std::string config_path;
  int samples = 1000;
  std::optional<std::uint64_t> seed;
  std::string out_path;
};
void cmd_analyze(const AnalyzeArgs& args);

struct DumpWorldArgs {
  WorldConfig config;
  std::string out_dir;
};
void cmd_dump_world(const DumpWorldArgs& args);

// Flat "key = value" file over the closed key set {algorithm, seed, steps, G,
// epsilon, kl_beta, schedule, lr_rl, lr_sft, grid, entries, K}. '#' starts a
// comment; unknown keys are rejected.
struct RunConfig {
  TrainerConfig trainer;
  WorldConfig world;
};
RunConfig load_run_config(const std::string& path);

}  // namespace salrl
