// SPDX-License-Identifier: Apache-2.0
#include "salrl/world.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

namespace salrl {

namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void validate_world_config(const WorldConfig& c) {
  if (c.entries < 2) throw std::invalid_argument("world: entries must be >= 2");
  if (c.grid < 8 || !power_of_two(c.grid))
    throw std::invalid_argument("world: grid must be a power of two >= 8");
  if (c.episodes_per_task < 1)
    throw std::invalid_argument("world: episodes_per_task must be >= 1");
  if (c.group_size < 1) throw std::invalid_argument("world: group_size must be >= 1");
  if (c.max_length < 10)
    throw std::invalid_argument("world: max_length too short for a golden response");
}

int draw(std::mt19937_64& rng, int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); }

BinaryMask rectangle(int grid, int x0, int y0, int w, int h) {
  BinaryMask m = make_binary(grid, grid);
  for (int r = y0; r < y0 + h; ++r)
    for (int c = x0; c < x0 + w; ++c) m.values[static_cast<std::size_t>(r) * grid + c] = 1;
  return m;
}

std::vector<BinaryMask> sample_rectangles(std::mt19937_64& rng, int grid, int count) {
  std::vector<BinaryMask> out;
  const int lo = std::max(2, grid / 8);
  const int span = std::max(1, grid / 4);
  int budget = 10000;
  while (static_cast<int>(out.size()) < count) {
    if (--budget < 0) throw std::runtime_error("world: rectangle rejection budget exhausted");
    int w = lo + draw(rng, span);
    int h = lo + draw(rng, span);
    int x0 = draw(rng, grid - w + 1);
    int y0 = draw(rng, grid - h + 1);
    BinaryMask cand = rectangle(grid, x0, y0, w, h);
    bool ok = true;
    for (const auto& m : out)
      if (iou(cand, m) > 0.3) {
        ok = false;
        break;
      }
    if (ok) out.push_back(std::move(cand));
  }
  return out;
}

// Distinct lexicon indices in ascending order.
std::vector<int> choose_entries(std::mt19937_64& rng, int entries, int count) {
  std::vector<int> chosen;
  while (static_cast<int>(chosen.size()) < count) {
    int e = draw(rng, entries);
    if (std::find(chosen.begin(), chosen.end(), e) == chosen.end()) chosen.push_back(e);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

void push_token(std::vector<int>& seq, const Vocabulary& vocab, const std::string& text) {
  int id = vocab.find(text);
  if (id < 0) throw std::logic_error("world: token missing from vocabulary: " + text);
  seq.push_back(id);
}

std::vector<int> golden_sequence(const Vocabulary& vocab, TaskKind task,
                                 const std::vector<std::string>& names) {
  std::vector<int> seq;
  push_token(seq, vocab, "<think>");
  push_token(seq, vocab, names.front());
  push_token(seq, vocab, "</think>");
  push_token(seq, vocab, "<answer>");
  for (const auto& name : names) {
    switch (task) {
      case TaskKind::sod:
        push_token(seq, vocab, "<rg>");
        push_token(seq, vocab, name);
        push_token(seq, vocab, "</rg>");
        break;
      case TaskKind::sis:
        push_token(seq, vocab, "<ins>");
        push_token(seq, vocab, name);
        push_token(seq, vocab, "</ins>");
        break;
      case TaskKind::cosod:
        push_token(seq, vocab, "<rg>");
        push_token(seq, vocab, "[semantic]");
        push_token(seq, vocab, name);
        push_token(seq, vocab, "</rg>");
        break;
    }
  }
  push_token(seq, vocab, "</answer>");
  seq.push_back(vocab.eos_id);
  return seq;
}

}  // namespace

const BinaryMask* Lexicon::find(const std::string& text) const {
  for (std::size_t i = 0; i < texts.size(); ++i)
    if (texts[i] == text) return &masks[i];
  return nullptr;
}

World build_world(const WorldConfig& config) {
  validate_world_config(config);
  World world;
  world.config = config;
  std::mt19937_64 rng(config.seed);

  world.lexicon.grid = config.grid;
  world.lexicon.masks = sample_rectangles(rng, config.grid, config.entries);
  for (int e = 0; e < config.entries; ++e) world.lexicon.texts.push_back("obj" + std::to_string(e));

  std::vector<std::string> content = world.lexicon.texts;
  world.vocab = Vocabulary::standard(content);

  // Golden token budget: 6 envelope/eos tokens plus 3 per expression (4 for
  // the cosod region). Cap the per-episode object count accordingly.
  int cap = std::min(3, std::min(config.entries, (config.max_length - 7) / 3));
  cap = std::max(1, cap);

  int prompt = 0;
  for (TaskKind task : {TaskKind::sod, TaskKind::sis, TaskKind::cosod}) {
    for (int ep = 0; ep < config.episodes_per_task; ++ep) {
      EpisodeSpec spec;
      spec.prompt = prompt++;
      spec.id = std::string(task_name(task)) + "-" + std::to_string(ep);
      spec.task = task;
      int count = task == TaskKind::cosod ? 1 : 1 + draw(rng, cap);
      std::vector<int> chosen = choose_entries(rng, config.entries, count);
      std::vector<std::string> names;
      for (int e : chosen) names.push_back(world.lexicon.texts[e]);
      switch (task) {
        case TaskKind::sod: {
          std::vector<BinaryMask> parts;
          for (int e : chosen) parts.push_back(world.lexicon.masks[e]);
          spec.sod_gt = mask_union(parts).to_gray();
          break;
        }
        case TaskKind::sis:
          for (int e : chosen) spec.sis_gt.push_back(world.lexicon.masks[e]);
          break;
        case TaskKind::cosod:
          for (int k = 0; k < config.group_size; ++k)
            spec.cosod_gt.push_back(world.lexicon.masks[chosen[0]].to_gray());
          break;
      }
      spec.golden_tokens = golden_sequence(world.vocab, task, names);
      if (static_cast<int>(spec.golden_tokens.size()) > config.max_length)
        throw std::logic_error("world: golden sequence exceeds max_length");
      spec.golden_text = decode(world.vocab, spec.golden_tokens);
      world.episodes.push_back(std::move(spec));
    }
  }

  for (const auto& spec : world.episodes) {
    RewardBreakdown b = score_response(world, spec, spec.golden_text);
    if (b.r_total != 1.0)
      throw std::logic_error("world: golden response for " + spec.id +
                             " scored " + std::to_string(b.r_total) + " instead of 1");
  }
  return world;
}

BinaryMask oracle_segment(const Lexicon& lexicon, const ReferringExpression& expr) {
  const BinaryMask* hit = lexicon.find(trim_copy(expr.text));
  if (hit) return *hit;
  return make_binary(lexicon.grid, lexicon.grid);
}

RewardBreakdown score_response(const World& world, const EpisodeSpec& episode,
                               const std::string& raw) {
  FormatVerdict verdict = format_reward(raw, episode.task);
  ParseOutcome parsed = parse_response(raw);
  double r_corr = 0.0;
  if (parsed.structure_ok) {
    const auto& exprs = parsed.response->expressions;
    switch (episode.task) {
      case TaskKind::sod: {
        std::vector<BinaryMask> masks;
        for (const auto& e : exprs)
          if (e.kind == ExprKind::region) masks.push_back(oracle_segment(world.lexicon, e));
        if (!masks.empty()) r_corr = correctness_sod(masks, episode.sod_gt);
        break;
      }
      case TaskKind::sis: {
        InstanceSet masks;
        for (const auto& e : exprs)
          if (e.kind == ExprKind::instance) masks.push_back(oracle_segment(world.lexicon, e));
        r_corr = iasm(masks, episode.sis_gt);
        break;
      }
      case TaskKind::cosod: {
        const ReferringExpression* first = nullptr;
        for (const auto& e : exprs)
          if (e.kind == ExprKind::region) {
            first = &e;
            break;
          }
        if (first) {
          BinaryMask m = oracle_segment(world.lexicon, *first);
          std::vector<BinaryMask> group(episode.cosod_gt.size(), m);
          r_corr = correctness_cosod(group, episode.cosod_gt);
        }
        break;
      }
    }
  }
  return total_reward(r_corr, verdict);
}

void dump_world(const World& world, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "masks");
  nlohmann::ordered_json manifest;
  manifest["seed"] = world.config.seed;
  manifest["grid"] = world.config.grid;
  manifest["entries"] = nlohmann::ordered_json::array();
  for (std::size_t e = 0; e < world.lexicon.texts.size(); ++e) {
    std::string rel = "masks/" + world.lexicon.texts[e] + ".pgm";
    save_mask(world.lexicon.masks[e], (fs::path(out_dir) / rel).string());
    manifest["entries"].push_back({{"text", world.lexicon.texts[e]}, {"mask", rel}});
  }
  manifest["episodes"] = nlohmann::ordered_json::array();
  for (const auto& ep : world.episodes) {
    nlohmann::ordered_json rec;
    rec["id"] = ep.id;
    rec["task"] = task_name(ep.task);
    rec["prompt"] = ep.prompt;
    rec["golden_text"] = ep.golden_text;
    std::vector<std::string> files;
    switch (ep.task) {
      case TaskKind::sod:
        files.push_back("masks/" + ep.id + "-gt.pgm");
        save_mask(ep.sod_gt, (fs::path(out_dir) / files.back()).string());
        break;
      case TaskKind::sis:
        for (std::size_t j = 0; j < ep.sis_gt.size(); ++j) {
          files.push_back("masks/" + ep.id + "-inst" + std::to_string(j) + ".pgm");
          save_mask(ep.sis_gt[j], (fs::path(out_dir) / files.back()).string());
        }
        break;
      case TaskKind::cosod:
        for (std::size_t k = 0; k < ep.cosod_gt.size(); ++k) {
          files.push_back("masks/" + ep.id + "-" + std::to_string(k) + ".pgm");
          save_mask(ep.cosod_gt[k], (fs::path(out_dir) / files.back()).string());
        }
        break;
    }
    rec["gt"] = files;
    manifest["episodes"].push_back(std::move(rec));
  }
  std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + out_dir + "/manifest.json");
  out << manifest.dump(2) << "\n";
}

}  // namespace salrl
