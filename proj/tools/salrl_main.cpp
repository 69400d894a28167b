// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "salrl/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"saliency reasoning toolkit"};
  app.require_subcommand(1);

  // eval
  auto* eval = app.add_subcommand("eval", "score prediction masks against ground truth");
  salrl::EvalArgs eval_args;
  std::string eval_task = "sod";
  eval->add_option("--pred", eval_args.pred_dir, "prediction directory")->required();
  eval->add_option("--gt", eval_args.gt_dir, "ground-truth directory")->required();
  eval->add_option("--task", eval_task, "sod, sis, or cosod")->required();
  eval->add_option("--out", eval_args.out_path, "output report path")->required();

  // reward
  auto* reward = app.add_subcommand("reward", "score structured responses");
  salrl::RewardArgs reward_args;
  std::optional<std::uint64_t> reward_seed;
  reward->add_option("--responses", reward_args.responses_path, "responses jsonl")->required();
  reward->add_option("--out", reward_args.out_path, "output jsonl path")->required();
  reward->add_option("--seed", reward_seed, "world seed (oracle mode)");
  reward->add_option("--entries", reward_args.world.entries, "lexicon size (oracle mode)");
  reward->add_option("--grid", reward_args.world.grid, "canvas size (oracle mode)");
  reward->add_flag("--adapter", reward_args.use_adapter, "use an external segmenter");
  reward->add_option("--gt", reward_args.gt_dir, "ground-truth directory (adapter mode)");
  reward->add_option("--adapter-dir", reward_args.adapter_dir, "adapter exchange directory");
  reward->add_option("--timeout-ms", reward_args.timeout_ms, "adapter wait budget");

  // parse
  auto* parse = app.add_subcommand("parse", "extract referring expressions");
  salrl::ParseArgs parse_args;
  std::string parse_task = "sod";
  parse->add_option("--responses", parse_args.responses_path, "responses jsonl")->required();
  parse->add_option("--task", parse_task, "sod, sis, or cosod")->required();
  parse->add_option("--out", parse_args.out_dir, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "run the synthetic training loop");
  salrl::TrainArgs train_args;
  std::optional<std::uint64_t> train_seed;
  train->add_option("--config", train_args.config_path, "run config file")->required();
  train->add_option("--out", train_args.out_dir, "output directory")->required();
  train->add_option("--seed", train_seed, "override the configured seed");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "advantage statistics by reward/confidence band");
  salrl::AnalyzeArgs analyze_args;
  std::optional<std::uint64_t> analyze_seed;
  analyze->add_option("--checkpoint", analyze_args.checkpoint_path, "policy checkpoint")->required();
  analyze->add_option("--config", analyze_args.config_path, "run config file")->required();
  analyze->add_option("--samples", analyze_args.samples, "sample budget");
  analyze->add_option("--seed", analyze_seed, "override the configured seed");
  analyze->add_option("--out", analyze_args.out_path, "output report path")->required();

  // dump-world
  auto* dump = app.add_subcommand("dump-world", "write the synthetic dataset to disk");
  salrl::DumpWorldArgs dump_args;
  std::optional<std::uint64_t> dump_seed;
  dump->add_option("--seed", dump_seed, "world seed");
  dump->add_option("--entries", dump_args.config.entries, "lexicon size");
  dump->add_option("--grid", dump_args.config.grid, "canvas size");
  dump->add_option("--episodes-per-task", dump_args.config.episodes_per_task, "episodes per task");
  dump->add_option("--out", dump_args.out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (eval->parsed()) {
      eval_args.task = salrl::task_from_string(eval_task);
      salrl::cmd_eval(eval_args);
    } else if (reward->parsed()) {
      if (reward_seed) reward_args.world.seed = *reward_seed;
      if (reward_args.use_adapter && (reward_args.gt_dir.empty() || reward_args.adapter_dir.empty()))
        throw std::invalid_argument("adapter mode needs --gt and --adapter-dir");
      salrl::cmd_reward(reward_args);
    } else if (parse->parsed()) {
      parse_args.task = salrl::task_from_string(parse_task);
      salrl::cmd_parse(parse_args);
    } else if (train->parsed()) {
      train_args.seed = train_seed;
      salrl::cmd_train(train_args);
    } else if (analyze->parsed()) {
      analyze_args.seed = analyze_seed;
      salrl::cmd_analyze(analyze_args);
    } else if (dump->parsed()) {
      if (dump_seed) dump_args.config.seed = *dump_seed;
      salrl::cmd_dump_world(dump_args);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
