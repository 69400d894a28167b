// SPDX-License-Identifier: Apache-2.0
#include "salrl/policy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace salrl {

int Vocabulary::find(const std::string& token) const {
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i] == token) return static_cast<int>(i);
  return -1;
}

Vocabulary Vocabulary::standard(const std::vector<std::string>& content_tokens) {
  Vocabulary v;
  v.tokens = {"<think>", "</think>", "<answer>", "</answer>", "<rg>",
              "</rg>",   "<ins>",    "</ins>",   "[semantic]"};
  for (const auto& t : content_tokens) v.tokens.push_back(t);
  v.tokens.push_back("<eos>");
  v.eos_id = static_cast<int>(v.tokens.size()) - 1;
  validate_vocabulary(v);
  return v;
}

void validate_vocabulary(const Vocabulary& vocab) {
  if (vocab.tokens.empty()) throw std::invalid_argument("vocabulary is empty");
  if (vocab.eos_id < 0 || vocab.eos_id >= vocab.size())
    throw std::invalid_argument("eos id out of range");
  std::set<std::string> seen;
  for (const auto& t : vocab.tokens) {
    if (t.empty()) throw std::invalid_argument("empty vocabulary token");
    for (char c : t)
      if (std::isspace(static_cast<unsigned char>(c)))
        throw std::invalid_argument("whitespace in vocabulary token: " + t);
    if (!seen.insert(t).second) throw std::invalid_argument("duplicate vocabulary token: " + t);
  }
}

TabularPolicy TabularPolicy::zeros(int prompt_count, int max_length, Vocabulary vocab) {
  if (prompt_count <= 0 || max_length <= 0)
    throw std::invalid_argument("policy dimensions must be positive");
  validate_vocabulary(vocab);
  TabularPolicy p;
  p.prompt_count = prompt_count;
  p.max_length = max_length;
  p.vocab = std::move(vocab);
  p.logits.assign(static_cast<std::size_t>(prompt_count) * max_length * p.vocab.size(), 0.0);
  return p;
}

std::size_t TabularPolicy::index(int prompt, int pos, int token) const {
  if (prompt < 0 || prompt >= prompt_count) throw std::out_of_range("prompt id out of range");
  if (pos < 0 || pos >= max_length) throw std::out_of_range("position out of range");
  if (token < 0 || token >= vocab.size()) throw std::out_of_range("token id out of range");
  return (static_cast<std::size_t>(prompt) * max_length + pos) * vocab.size() + token;
}

std::vector<double> TabularPolicy::distribution(int prompt, int pos) const {
  const int v = vocab.size();
  std::vector<double> out(v);
  const std::size_t base = index(prompt, pos, 0);
  double zmax = logits[base];
  for (int t = 1; t < v; ++t) zmax = std::max(zmax, logits[base + t]);
  double sum = 0.0;
  for (int t = 0; t < v; ++t) {
    out[t] = std::exp(logits[base + t] - zmax);
    sum += out[t];
  }
  for (int t = 0; t < v; ++t) out[t] /= sum;
  return out;
}

double uniform_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Trajectory sample(const TabularPolicy& policy, int prompt, std::mt19937_64& rng) {
  Trajectory traj;
  traj.prompt = prompt;
  for (int pos = 0; pos < policy.max_length; ++pos) {
    std::vector<double> dist = policy.distribution(prompt, pos);
    double u = uniform_double(rng);
    int tok = policy.vocab.size() - 1;
    double cum = 0.0;
    for (int t = 0; t < policy.vocab.size(); ++t) {
      cum += dist[t];
      if (u < cum) {
        tok = t;
        break;
      }
    }
    traj.tokens.push_back(tok);
    traj.probs.push_back(std::max(dist[tok], kProbFloor));
    if (tok == policy.vocab.eos_id) break;
  }
  traj.decoded = decode(policy.vocab, traj.tokens);
  traj.confidence = confidence(traj);
  return traj;
}

std::vector<double> token_probs(const TabularPolicy& policy, int prompt,
                                const std::vector<int>& tokens) {
  if (static_cast<int>(tokens.size()) > policy.max_length)
    throw std::invalid_argument("token sequence longer than policy horizon");
  std::vector<double> out;
  out.reserve(tokens.size());
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    std::vector<double> dist = policy.distribution(prompt, static_cast<int>(pos));
    int tok = tokens[pos];
    if (tok < 0 || tok >= policy.vocab.size()) throw std::out_of_range("token id out of range");
    out.push_back(std::max(dist[tok], kProbFloor));
  }
  return out;
}

double confidence(const Trajectory& traj) {
  if (traj.probs.empty()) throw std::invalid_argument("confidence of an empty trajectory");
  double s = 0.0;
  for (double p : traj.probs) s += p;
  return s / static_cast<double>(traj.probs.size());
}

std::string decode(const Vocabulary& vocab, const std::vector<int>& tokens) {
  std::string out;
  for (int t : tokens) {
    if (t == vocab.eos_id) continue;
    if (!out.empty()) out += ' ';
    out += vocab.tokens[t];
  }
  return out;
}

void sft_step(TabularPolicy& policy, int prompt, const std::vector<int>& golden, double lr) {
  if (static_cast<int>(golden.size()) > policy.max_length)
    throw std::invalid_argument("golden sequence longer than policy horizon");
  for (std::size_t pos = 0; pos < golden.size(); ++pos) {
    std::vector<double> dist = policy.distribution(prompt, static_cast<int>(pos));
    const std::size_t base = policy.index(prompt, static_cast<int>(pos), 0);
    for (int t = 0; t < policy.vocab.size(); ++t) {
      double grad = (t == golden[pos] ? 1.0 : 0.0) - dist[t];
      policy.logits[base + t] += lr * grad;
    }
  }
}

double golden_probability(const TabularPolicy& policy, int prompt,
                          const std::vector<int>& golden) {
  double p = 1.0;
  for (double q : token_probs(policy, prompt, golden)) p *= q;
  return p;
}

double kl_divergence(const TabularPolicy& policy, const TabularPolicy& reference, int prompt) {
  if (policy.max_length != reference.max_length ||
      policy.vocab.size() != reference.vocab.size() ||
      policy.prompt_count != reference.prompt_count)
    throw std::invalid_argument("kl_divergence: shape mismatch");
  double total = 0.0;
  for (int pos = 0; pos < policy.max_length; ++pos) {
    std::vector<double> p = policy.distribution(prompt, pos);
    std::vector<double> q = reference.distribution(prompt, pos);
    for (int t = 0; t < policy.vocab.size(); ++t) total += p[t] * std::log(p[t] / q[t]);
  }
  return total;
}

void save_policy(const TabularPolicy& policy, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "salrl-policy 1\n";
  out << "prompts " << policy.prompt_count << "\n";
  out << "max_length " << policy.max_length << "\n";
  out << "eos " << policy.vocab.eos_id << "\n";
  out << "vocab " << policy.vocab.size() << "\n";
  for (const auto& t : policy.vocab.tokens) out << t << "\n";
  out << "logits " << policy.logits.size() << "\n";
  out << std::hexfloat;
  const int row = policy.vocab.size();
  for (std::size_t i = 0; i < policy.logits.size(); ++i) {
    out << policy.logits[i];
    out << ((static_cast<int>(i) % row == row - 1) ? '\n' : ' ');
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

std::string expect_field(std::istream& in, const std::string& name) {
  std::string key, value;
  if (!(in >> key >> value) || key != name)
    throw std::runtime_error("policy checkpoint: expected field " + name);
  return value;
}

}  // namespace

TabularPolicy load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing file: " + path);
  std::string magic, version;
  if (!(in >> magic >> version) || magic != "salrl-policy" || version != "1")
    throw std::runtime_error("policy checkpoint: unsupported header in " + path);
  TabularPolicy p;
  p.prompt_count = std::stoi(expect_field(in, "prompts"));
  p.max_length = std::stoi(expect_field(in, "max_length"));
  p.vocab.eos_id = std::stoi(expect_field(in, "eos"));
  int vocab_size = std::stoi(expect_field(in, "vocab"));
  for (int i = 0; i < vocab_size; ++i) {
    std::string tok;
    if (!(in >> tok)) throw std::runtime_error("policy checkpoint: truncated vocabulary");
    p.vocab.tokens.push_back(tok);
  }
  validate_vocabulary(p.vocab);
  std::size_t count = std::stoull(expect_field(in, "logits"));
  if (count != static_cast<std::size_t>(p.prompt_count) * p.max_length * vocab_size)
    throw std::runtime_error("policy checkpoint: logit count mismatch");
  p.logits.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string word;
    if (!(in >> word)) throw std::runtime_error("policy checkpoint: truncated logits");
    char* end = nullptr;
    double v = std::strtod(word.c_str(), &end);
    if (end == word.c_str() || *end != '\0')
      throw std::runtime_error("policy checkpoint: bad logit value " + word);
    p.logits.push_back(v);
  }
  return p;
}

}  // namespace salrl
