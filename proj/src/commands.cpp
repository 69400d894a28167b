// SPDX-License-Identifier: Apache-2.0
#include "salrl/commands.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "salrl/adapter.hpp"

namespace salrl {

namespace fs = std::filesystem;

namespace {

using nlohmann::ordered_json;

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_text(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::string> list_pgm_stems(const std::string& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("missing directory: " + dir);
  std::vector<std::string> stems;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".pgm")
      stems.push_back(e.path().stem().string());
  std::sort(stems.begin(), stems.end());
  return stems;
}

std::vector<std::string> list_subdirs(const std::string& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("missing directory: " + dir);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

// gt instance files are inst_{j}.pgm; returns paths ordered by j.
std::vector<std::string> list_instance_files(const std::string& dir,
                                             std::vector<std::string>& problems) {
  std::vector<std::pair<long, std::string>> found;
  if (!fs::is_directory(dir)) {
    problems.push_back("missing directory: " + dir);
    return {};
  }
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string name = e.path().filename().string();
    if (name.size() < 10 || name.rfind("inst_", 0) != 0 ||
        name.substr(name.size() - 4) != ".pgm") {
      problems.push_back("unexpected file in instance layout: " + e.path().string());
      continue;
    }
    std::string digits = name.substr(5, name.size() - 9);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
      problems.push_back("unexpected file in instance layout: " + e.path().string());
      continue;
    }
    found.emplace_back(std::stol(digits), e.path().string());
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> out;
  for (auto& [j, p] : found) out.push_back(std::move(p));
  return out;
}

void fail_on_problems(const std::vector<std::string>& problems) {
  if (problems.empty()) return;
  std::string msg = "layout violations:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw std::runtime_error(msg);
}

struct MapScores {
  double s_m = 0.0, e_xi = 0.0, f_beta = 0.0, mae_v = 0.0;
};

MapScores score_map_pair(const GrayMask& pred, const GrayMask& gt) {
  BinaryMask gtb = binarize(gt, kBinaryIngestThreshold);
  return {s_measure(pred, gtb), e_measure(pred, gtb), f_measure_max(pred, gtb), mae(pred, gt)};
}

std::string map_metrics_json(const MapScores& s) {
  return "\"S_m\":" + fmt6(s.s_m) + ",\"E_xi\":" + fmt6(s.e_xi) +
         ",\"F_beta_max\":" + fmt6(s.f_beta) + ",\"MAE\":" + fmt6(s.mae_v);
}

std::string quote(const std::string& s) { return ordered_json(s).dump(); }

// ---------------- eval ----------------

void eval_maps(const EvalArgs& args, bool grouped) {
  std::vector<std::string> problems;
  std::vector<std::pair<std::string, MapScores>> items;

  if (!grouped) {
    std::vector<std::string> ids = list_pgm_stems(args.gt_dir);
    if (ids.empty()) throw std::runtime_error("no ground-truth items in " + args.gt_dir);
    for (const auto& id : ids) {
      fs::path pp = fs::path(args.pred_dir) / (id + ".pgm");
      if (!fs::exists(pp)) {
        problems.push_back("missing prediction: " + pp.string());
        continue;
      }
      try {
        GrayMask pred = load_mask(pp.string());
        GrayMask gt = load_mask((fs::path(args.gt_dir) / (id + ".pgm")).string());
        items.emplace_back(id, score_map_pair(pred, gt));
      } catch (const std::exception& ex) {
        problems.push_back(id + ": " + ex.what());
      }
    }
  } else {
    std::vector<std::string> groups = list_subdirs(args.gt_dir);
    if (groups.empty()) throw std::runtime_error("no ground-truth groups in " + args.gt_dir);
    for (const auto& group : groups) {
      std::vector<std::string> ks = list_pgm_stems((fs::path(args.gt_dir) / group).string());
      if (ks.empty()) {
        problems.push_back("empty group: " + group);
        continue;
      }
      MapScores acc;
      bool ok = true;
      for (const auto& k : ks) {
        fs::path pp = fs::path(args.pred_dir) / group / (k + ".pgm");
        if (!fs::exists(pp)) {
          problems.push_back("missing prediction: " + pp.string());
          ok = false;
          continue;
        }
        try {
          GrayMask pred = load_mask(pp.string());
          GrayMask gt = load_mask((fs::path(args.gt_dir) / group / (k + ".pgm")).string());
          MapScores s = score_map_pair(pred, gt);
          acc.s_m += s.s_m;
          acc.e_xi += s.e_xi;
          acc.f_beta += s.f_beta;
          acc.mae_v += s.mae_v;
        } catch (const std::exception& ex) {
          problems.push_back(group + "/" + k + ": " + ex.what());
          ok = false;
        }
      }
      if (!ok) continue;
      double n = static_cast<double>(ks.size());
      items.emplace_back(group, MapScores{acc.s_m / n, acc.e_xi / n, acc.f_beta / n,
                                          acc.mae_v / n});
    }
  }
  fail_on_problems(problems);

  MapScores agg;
  for (const auto& [id, s] : items) {
    agg.s_m += s.s_m;
    agg.e_xi += s.e_xi;
    agg.f_beta += s.f_beta;
    agg.mae_v += s.mae_v;
  }
  double n = static_cast<double>(items.size());
  agg = {agg.s_m / n, agg.e_xi / n, agg.f_beta / n, agg.mae_v / n};

  std::string out = "{\"task\":" + quote(task_name(args.task)) + ",\"items\":[\n";
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += "{\"id\":" + quote(items[i].first) + "," + map_metrics_json(items[i].second) + "}";
    out += i + 1 < items.size() ? ",\n" : "\n";
  }
  out += "],\"aggregate\":{" + map_metrics_json(agg) + "}}\n";
  write_text(args.out_path, out);
}

void eval_instances(const EvalArgs& args) {
  std::vector<std::string> problems;
  std::vector<std::string> ids = list_subdirs(args.gt_dir);
  if (ids.empty()) throw std::runtime_error("no ground-truth items in " + args.gt_dir);

  struct Row {
    std::string id;
    double ap50, ap70, iasm_v;
  };
  std::vector<Row> items;
  for (const auto& id : ids) {
    std::vector<std::string> gt_files =
        list_instance_files((fs::path(args.gt_dir) / id).string(), problems);
    std::vector<std::string> pred_files =
        list_instance_files((fs::path(args.pred_dir) / id).string(), problems);
    if (gt_files.empty()) {
      problems.push_back("no ground-truth instances for item: " + id);
      continue;
    }
    try {
      std::vector<BinaryMask> gts;
      for (const auto& p : gt_files) gts.push_back(binarize(load_mask(p), kBinaryIngestThreshold));
      std::vector<ScoredMask> preds;
      InstanceSet pred_masks;
      for (const auto& p : pred_files) {
        BinaryMask m = binarize(load_mask(p), kBinaryIngestThreshold);
        preds.push_back({m, 1.0});
        pred_masks.push_back(std::move(m));
      }
      Row row{id, average_precision(preds, gts, 0.5), average_precision(preds, gts, 0.7),
              iasm(pred_masks, gts)};
      items.push_back(std::move(row));
    } catch (const std::exception& ex) {
      problems.push_back(id + ": " + ex.what());
    }
  }
  fail_on_problems(problems);

  double a50 = 0.0, a70 = 0.0, ai = 0.0;
  for (const auto& r : items) {
    a50 += r.ap50;
    a70 += r.ap70;
    ai += r.iasm_v;
  }
  double n = static_cast<double>(items.size());
  std::string out = "{\"task\":\"sis\",\"items\":[\n";
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Row& r = items[i];
    out += "{\"id\":" + quote(r.id) + ",\"AP50\":" + fmt6(r.ap50) + ",\"AP70\":" + fmt6(r.ap70) +
           ",\"IASM\":" + fmt6(r.iasm_v) + "}";
    out += i + 1 < items.size() ? ",\n" : "\n";
  }
  out += "],\"aggregate\":{\"AP50\":" + fmt6(a50 / n) + ",\"AP70\":" + fmt6(a70 / n) +
         ",\"IASM\":" + fmt6(ai / n) + "}}\n";
  write_text(args.out_path, out);
}

// ---------------- reward ----------------

struct ResponseLine {
  bool ok = false;
  std::string error;
  std::string id;
  TaskKind task = TaskKind::sod;
  std::string response;
};

ResponseLine parse_response_line(const std::string& line) {
  ResponseLine out;
  try {
    nlohmann::json j = nlohmann::json::parse(line);
    out.id = j.at("id").get<std::string>();
    out.task = task_from_string(j.at("task").get<std::string>());
    out.response = j.at("response").get<std::string>();
    out.ok = true;
  } catch (const std::exception& ex) {
    out.error = ex.what();
  }
  return out;
}

std::string breakdown_json(const std::string& id, TaskKind task, const RewardBreakdown& b) {
  return "{\"id\":" + quote(id) + ",\"task\":" + quote(task_name(task)) +
         ",\"r_corr\":" + fmt6(b.r_corr) + ",\"r_fmt\":" + fmt6(b.r_fmt) +
         ",\"r_total\":" + fmt6(b.r_total) + "}";
}

// Correctness from externally supplied per-expression masks, mirroring the
// oracle composition rules.
double adapter_correctness(TaskKind task, const std::vector<BinaryMask>& masks,
                           const std::string& gt_dir, const std::string& id,
                           std::vector<std::string>& problems) {
  try {
    switch (task) {
      case TaskKind::sod: {
        GrayMask gt = load_mask((fs::path(gt_dir) / (id + ".pgm")).string());
        if (masks.empty()) return 0.0;
        return correctness_sod(masks, gt);
      }
      case TaskKind::sis: {
        std::vector<std::string> lay;
        std::vector<std::string> files = list_instance_files((fs::path(gt_dir) / id).string(), lay);
        for (auto& p : lay) problems.push_back(std::move(p));
        InstanceSet gts;
        for (const auto& p : files) gts.push_back(binarize(load_mask(p), kBinaryIngestThreshold));
        if (gts.empty()) {
          problems.push_back("no ground-truth instances for " + id);
          return 0.0;
        }
        return iasm(masks, gts);
      }
      case TaskKind::cosod: {
        std::vector<std::string> ks = list_pgm_stems((fs::path(gt_dir) / id).string());
        if (ks.empty()) {
          problems.push_back("no group images for " + id);
          return 0.0;
        }
        if (masks.empty()) return 0.0;
        std::vector<GrayMask> gts;
        for (const auto& k : ks)
          gts.push_back(load_mask((fs::path(gt_dir) / id / (k + ".pgm")).string()));
        std::vector<BinaryMask> group(gts.size(), masks.front());
        return correctness_cosod(group, gts);
      }
    }
  } catch (const std::exception& ex) {
    problems.push_back(id + ": " + ex.what());
  }
  return 0.0;
}

void reward_with_adapter(const RewardArgs& args, const std::vector<std::string>& lines,
                         std::vector<std::string>& out_records) {
  struct Pending {
    std::size_t line_index;
    ResponseLine line;
    FormatVerdict verdict;
    std::vector<ReferringExpression> exprs;  // task-relevant subset
    std::vector<SegmenterRequest> requests;
  };
  std::vector<Pending> pending;
  std::vector<SegmenterRequest> all_requests;
  out_records.assign(lines.size(), std::string());

  for (std::size_t i = 0; i < lines.size(); ++i) {
    ResponseLine rl = parse_response_line(lines[i]);
    if (!rl.ok) {
      out_records[i] =
          "{\"line\":" + std::to_string(i + 1) + ",\"error\":" + quote(rl.error) + "}";
      continue;
    }
    Pending p;
    p.line_index = i;
    p.line = rl;
    p.verdict = format_reward(rl.response, rl.task);
    ParseOutcome parsed = parse_response(rl.response);
    if (parsed.structure_ok) {
      const ExprKind want = rl.task == TaskKind::sis ? ExprKind::instance : ExprKind::region;
      for (const auto& e : parsed.response->expressions)
        if (e.kind == want) p.exprs.push_back(e);
      if (rl.task == TaskKind::cosod && p.exprs.size() > 1) p.exprs.resize(1);
      for (std::size_t k = 0; k < p.exprs.size(); ++k) {
        SegmenterRequest req;
        req.id = sanitize_id(rl.id) + "." + std::to_string(k);
        req.image = rl.id;
        req.text = p.exprs[k].text;
        req.kind = p.exprs[k].kind;
        p.requests.push_back(req);
        all_requests.push_back(req);
      }
    }
    pending.push_back(std::move(p));
  }

  write_requests(all_requests, args.adapter_dir);

  std::vector<std::string> problems;
  for (auto& p : pending) {
    double r_corr = 0.0;
    bool structural = !p.requests.empty() || p.verdict.r_struct > 0.0;
    if (structural) {
      // Canvas size comes from the item's own ground truth.
      int w = -1, h = -1;
      TaskKind t = p.line.task;
      std::string probe;
      if (t == TaskKind::sod) {
        probe = (fs::path(args.gt_dir) / (p.line.id + ".pgm")).string();
      } else {
        std::vector<std::string> lay;
        std::vector<std::string> files =
            t == TaskKind::sis
                ? list_instance_files((fs::path(args.gt_dir) / p.line.id).string(), lay)
                : std::vector<std::string>{};
        if (t == TaskKind::cosod) {
          std::vector<std::string> ks =
              list_pgm_stems((fs::path(args.gt_dir) / p.line.id).string());
          if (!ks.empty())
            probe = (fs::path(args.gt_dir) / p.line.id / (ks.front() + ".pgm")).string();
        } else if (!files.empty()) {
          probe = files.front();
        }
      }
      try {
        if (probe.empty()) throw std::runtime_error("no ground truth found for " + p.line.id);
        GrayMask g = load_mask(probe);
        w = g.width;
        h = g.height;
        std::map<std::string, BinaryMask> answered =
            await_masks(p.requests, args.adapter_dir, args.timeout_ms, w, h);
        std::vector<BinaryMask> masks;
        for (const auto& req : p.requests) masks.push_back(answered.at(req.id));
        r_corr = adapter_correctness(p.line.task, masks, args.gt_dir, p.line.id, problems);
      } catch (const std::exception& ex) {
        throw std::runtime_error(std::string("reward: ") + ex.what());
      }
    }
    RewardBreakdown b = total_reward(r_corr, p.verdict);
    out_records[p.line_index] = breakdown_json(p.line.id, p.line.task, b);
  }
  fail_on_problems(problems);
}

// ---------------- analyze ----------------

std::string category_stats_json(const CategoryStats& st, int samples) {
  const char* names[4] = {"hrhc", "hrlc", "lrhc", "lrlc"};
  std::string out = "{\"samples\":" + std::to_string(samples);
  out += ",\"r_low\":" + fmt6(st.r_low) + ",\"r_high\":" + fmt6(st.r_high);
  out += ",\"c_low\":" + fmt6(st.c_low) + ",\"c_high\":" + fmt6(st.c_high);
  for (int q = 0; q < 4; ++q)
    out += ",\"count_" + std::string(names[q]) + "\":" + std::to_string(st.counts[q]);
  for (int q = 0; q < 4; ++q)
    out += ",\"cgpo_mean_abs_" + std::string(names[q]) + "\":" + fmt6(st.mean_abs_cgpo[q]);
  for (int q = 0; q < 4; ++q)
    out += ",\"grpo_mean_abs_" + std::string(names[q]) + "\":" + fmt6(st.mean_abs_grpo[q]);
  out += "}\n";
  return out;
}

}  // namespace

void cmd_eval(const EvalArgs& args) {
  if (args.task == TaskKind::sis)
    eval_instances(args);
  else
    eval_maps(args, args.task == TaskKind::cosod);
}

void cmd_reward(const RewardArgs& args) {
  std::vector<std::string> lines = read_lines(args.responses_path);
  std::vector<std::string> records;

  if (args.use_adapter) {
    reward_with_adapter(args, lines, records);
  } else {
    World world = build_world(args.world);
    std::map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < world.episodes.size(); ++i) by_id[world.episodes[i].id] = i;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      ResponseLine rl = parse_response_line(lines[i]);
      if (!rl.ok) {
        records.push_back("{\"line\":" + std::to_string(i + 1) +
                          ",\"error\":" + quote(rl.error) + "}");
        continue;
      }
      auto it = by_id.find(rl.id);
      if (it == by_id.end()) {
        records.push_back("{\"line\":" + std::to_string(i + 1) +
                          ",\"error\":" + quote("unknown episode id: " + rl.id) + "}");
        continue;
      }
      const EpisodeSpec& ep = world.episodes[it->second];
      if (ep.task != rl.task) {
        records.push_back("{\"line\":" + std::to_string(i + 1) +
                          ",\"error\":" + quote("task mismatch for episode " + rl.id) + "}");
        continue;
      }
      RewardBreakdown b = score_response(world, ep, rl.response);
      records.push_back(breakdown_json(rl.id, rl.task, b));
    }
  }

  std::string out;
  for (const auto& r : records) out += r + "\n";
  write_text(args.out_path, out);
}

void cmd_parse(const ParseArgs& args) {
  std::vector<std::string> lines = read_lines(args.responses_path);
  std::string expressions;
  int valid = 0, invalid = 0;
  std::map<std::string, int> diagnostic_counts;

  for (const auto& line : lines) {
    ResponseLine rl = parse_response_line(line);
    if (!rl.ok) {
      ++invalid;
      ++diagnostic_counts["unreadable line"];
      continue;
    }
    FormatVerdict v = format_reward(rl.response, args.task);
    ParseOutcome parsed = parse_response(rl.response);
    if (v.total() == 1.0 && parsed.response) {
      ++valid;
      expressions += serialize_expressions(*parsed.response, rl.id);
    } else {
      ++invalid;
      std::vector<std::string> ds = v.diagnostics;
      if (ds.empty()) ds.push_back("task validation failed");
      for (const auto& d : ds) ++diagnostic_counts[d];
    }
  }

  ordered_json summary;
  summary["valid"] = valid;
  summary["invalid"] = invalid;
  summary["diagnostics"] = nlohmann::json::object();
  for (const auto& [k, n] : diagnostic_counts) summary["diagnostics"][k] = n;

  fs::create_directories(args.out_dir);
  write_text((fs::path(args.out_dir) / "expressions.jsonl").string(), expressions);
  write_text((fs::path(args.out_dir) / "summary.json").string(), summary.dump(2) + "\n");
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing file: " + path);
  RunConfig rc;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    for (char& c : line)
      if (c == '=') c = ' ';
    std::istringstream ss(line);
    std::string key, value, extra;
    if (!(ss >> key)) continue;  // blank
    if (!(ss >> value) || ss >> extra)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    try {
      if (key == "algorithm")
        rc.trainer.algorithm = algorithm_from_string(value);
      else if (key == "seed")
        rc.trainer.seed = std::stoull(value);
      else if (key == "steps")
        rc.trainer.steps = std::stoi(value);
      else if (key == "G")
        rc.trainer.group_size = std::stoi(value);
      else if (key == "epsilon")
        rc.trainer.epsilon = std::stod(value);
      else if (key == "kl_beta")
        rc.trainer.kl_beta = std::stod(value);
      else if (key == "schedule")
        rc.trainer.schedule = value;
      else if (key == "lr_rl")
        rc.trainer.lr_rl = std::stod(value);
      else if (key == "lr_sft")
        rc.trainer.lr_sft = std::stod(value);
      else if (key == "grid")
        rc.world.grid = std::stoi(value);
      else if (key == "entries")
        rc.world.entries = std::stoi(value);
      else if (key == "K")
        rc.world.group_size = std::stoi(value);
      else
        throw std::invalid_argument("unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": bad value for " +
                                  key);
    }
  }
  rc.world.seed = rc.trainer.seed;
  return rc;
}

void cmd_train(const TrainArgs& args) {
  RunConfig rc = load_run_config(args.config_path);
  if (args.seed) {
    rc.trainer.seed = *args.seed;
    rc.world.seed = *args.seed;
  }
  validate_config(rc.trainer);
  World world = build_world(rc.world);
  TabularPolicy policy = TabularPolicy::zeros(static_cast<int>(world.episodes.size()),
                                              rc.world.max_length, world.vocab);
  TrainingReport report = train(rc.trainer, world, policy);

  fs::create_directories(args.out_dir);
  write_text((fs::path(args.out_dir) / "report.jsonl").string(), report_lines(report));
  write_text((fs::path(args.out_dir) / "summary.json").string(), report_summary(report));
  save_policy(policy, (fs::path(args.out_dir) / "policy.ckpt").string());
  std::cout << report_summary(report);
}

void cmd_analyze(const AnalyzeArgs& args) {
  if (args.samples < 100) throw std::invalid_argument("analyze: need at least 100 samples");
  RunConfig rc = load_run_config(args.config_path);
  if (args.seed) rc.world.seed = rc.trainer.seed = *args.seed;
  World world = build_world(rc.world);
  TabularPolicy policy = load_policy(args.checkpoint_path);
  if (policy.prompt_count != static_cast<int>(world.episodes.size()) ||
      policy.vocab.tokens != world.vocab.tokens)
    throw std::runtime_error("analyze: checkpoint does not match the configured world");

  const int g = std::max(2, rc.trainer.group_size);
  const int groups = std::max(1, args.samples / g);
  std::mt19937_64 rng(rc.trainer.seed);
  std::vector<ResponseSample> samples;
  for (int b = 0; b < groups; ++b) {
    const EpisodeSpec& ep = world.episodes[static_cast<std::size_t>(b) % world.episodes.size()];
    std::vector<double> rewards, confidences;
    for (int i = 0; i < g; ++i) {
      Trajectory traj = sample(policy, ep.prompt, rng);
      rewards.push_back(score_response(world, ep, traj.decoded).r_total);
      confidences.push_back(traj.confidence);
    }
    std::vector<double> adv = grpo_advantages(rewards);
    for (int i = 0; i < g; ++i)
      samples.push_back({rewards[i], confidences[i], rewards[i] - confidences[i], adv[i]});
  }
  CategoryStats st = categorize_responses(samples);
  write_text(args.out_path, category_stats_json(st, static_cast<int>(samples.size())));
}

void cmd_dump_world(const DumpWorldArgs& args) {
  World world = build_world(args.config);
  dump_world(world, args.out_dir);
}

}  // namespace salrl
