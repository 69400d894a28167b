// SPDX-License-Identifier: Apache-2.0
#include "salrl/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace salrl {

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "cgpo") return Algorithm::cgpo;
  if (name == "grpo") return Algorithm::grpo;
  throw std::invalid_argument("unknown algorithm: " + name);
}

const char* algorithm_name(Algorithm a) { return a == Algorithm::cgpo ? "cgpo" : "grpo"; }

void validate_config(const TrainerConfig& config) {
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("config: epsilon must be positive");
  if (config.steps < 0) throw std::invalid_argument("config: steps must be >= 0");
  if (!(config.lr_rl > 0.0) || !(config.lr_sft > 0.0))
    throw std::invalid_argument("config: learning rates must be positive");
  if (config.algorithm == Algorithm::cgpo) {
    if (config.schedule.empty()) throw std::invalid_argument("config: empty schedule");
    bool has_rl = false;
    for (char ch : config.schedule) {
      if (ch != 'R' && ch != 'S')
        throw std::invalid_argument("config: schedule may contain only R and S");
      has_rl |= ch == 'R';
    }
    if (!has_rl) throw std::invalid_argument("config: schedule needs at least one R");
  } else {
    if (config.group_size < 2) throw std::invalid_argument("config: grpo needs group_size >= 2");
    if (config.kl_beta < 0.0) throw std::invalid_argument("config: kl_beta must be >= 0");
  }
}

double cgpo_advantage(double r, double c) {
  if (!(r >= 0.0 && r <= 1.0 && c >= 0.0 && c <= 1.0))
    throw std::invalid_argument("cgpo_advantage: inputs outside [0,1]");
  return r - c;
}

double bce_gradient_check(double r, double c) {
  if (!(c > 0.0 && c < 1.0)) throw std::domain_error("bce_gradient_check: c must lie in (0,1)");
  return (r - c) / (c * (1.0 - c));
}

std::vector<double> grpo_advantages(const std::vector<double>& rewards) {
  const std::size_t n = rewards.size();
  if (n < 2) throw std::invalid_argument("grpo_advantages: group size must be >= 2");
  bool uniform = true;
  for (double r : rewards) uniform &= r == rewards[0];
  if (uniform) return std::vector<double>(n, 0.0);
  double mu = 0.0;
  for (double r : rewards) mu += r;
  mu /= static_cast<double>(n);
  double var = 0.0;
  for (double r : rewards) var += (r - mu) * (r - mu);
  double sigma = std::sqrt(var / static_cast<double>(n));
  std::vector<double> out(n);
  if (sigma == 0.0) return out;
  for (std::size_t i = 0; i < n; ++i) out[i] = (rewards[i] - mu) / sigma;
  return out;
}

SurrogateResult clipped_surrogate(const std::vector<double>& old_probs,
                                  const std::vector<double>& new_probs, double advantage,
                                  double epsilon) {
  if (old_probs.empty() || old_probs.size() != new_probs.size())
    throw std::invalid_argument("clipped_surrogate: probability lists misaligned");
  if (!(epsilon > 0.0)) throw std::invalid_argument("clipped_surrogate: epsilon must be positive");
  const double t_count = static_cast<double>(old_probs.size());
  SurrogateResult res;
  res.dobj_dnew.assign(old_probs.size(), 0.0);
  for (std::size_t t = 0; t < old_probs.size(); ++t) {
    if (!(old_probs[t] > 0.0))
      throw std::invalid_argument("clipped_surrogate: nonpositive old probability");
    double rho = new_probs[t] / old_probs[t];
    double unclipped = rho * advantage;
    double clipped = std::clamp(rho, 1.0 - epsilon, 1.0 + epsilon) * advantage;
    if (unclipped <= clipped) {  // ties keep the gradient alive
      res.objective += unclipped;
      res.dobj_dnew[t] = advantage / (old_probs[t] * t_count);
    } else {
      res.objective += clipped;
      ++res.clipped;
    }
  }
  res.objective /= t_count;
  return res;
}

std::vector<double> surrogate_logit_gradient(const TabularPolicy& policy, int prompt,
                                             const std::vector<int>& tokens,
                                             const std::vector<double>& old_probs,
                                             double advantage, double epsilon) {
  if (tokens.size() != old_probs.size())
    throw std::invalid_argument("surrogate_logit_gradient: token/prob misalignment");
  std::vector<double> newp = token_probs(policy, prompt, tokens);
  SurrogateResult sur = clipped_surrogate(old_probs, newp, advantage, epsilon);
  const int v = policy.vocab.size();
  std::vector<double> grad(tokens.size() * static_cast<std::size_t>(v), 0.0);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (sur.dobj_dnew[t] == 0.0) continue;
    std::vector<double> dist = policy.distribution(prompt, static_cast<int>(t));
    double p_tok = dist[tokens[t]];
    for (int u = 0; u < v; ++u) {
      double jac = p_tok * ((u == tokens[t] ? 1.0 : 0.0) - dist[u]);
      grad[t * v + u] = sur.dobj_dnew[t] * jac;
    }
  }
  return grad;
}

std::vector<double> kl_logit_gradient(const TabularPolicy& policy,
                                      const TabularPolicy& reference, int prompt) {
  if (policy.max_length != reference.max_length || policy.vocab.size() != reference.vocab.size())
    throw std::invalid_argument("kl_logit_gradient: shape mismatch");
  const int v = policy.vocab.size();
  std::vector<double> grad(static_cast<std::size_t>(policy.max_length) * v, 0.0);
  for (int pos = 0; pos < policy.max_length; ++pos) {
    std::vector<double> p = policy.distribution(prompt, pos);
    std::vector<double> q = reference.distribution(prompt, pos);
    double kl = 0.0;
    for (int u = 0; u < v; ++u) kl += p[u] * std::log(p[u] / q[u]);
    for (int u = 0; u < v; ++u)
      grad[static_cast<std::size_t>(pos) * v + u] = p[u] * (std::log(p[u] / q[u]) - kl);
  }
  return grad;
}

Phase isr_phase(int step, const std::string& schedule) {
  if (schedule.empty()) throw std::invalid_argument("isr_phase: empty schedule");
  if (step < 1) throw std::invalid_argument("isr_phase: steps are 1-based");
  char ch = schedule[static_cast<std::size_t>(step - 1) % schedule.size()];
  if (ch == 'R') return Phase::rl;
  if (ch == 'S') return Phase::sft;
  throw std::invalid_argument("isr_phase: schedule may contain only R and S");
}

std::vector<double> rank_normalize(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) throw std::invalid_argument("rank_normalize: need at least two values");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && values[idx[j]] == values[idx[i]]) ++j;
    double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) rank[idx[k]] = avg;
    i = j;
  }
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t)
    out[t] = 2.0 * (rank[t] - 1.0) / (static_cast<double>(n) - 1.0) - 1.0;
  return out;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile: empty input");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("percentile: p outside [0,1]");
  std::sort(values.begin(), values.end());
  double h = (static_cast<double>(values.size()) - 1.0) * p;
  std::size_t lo = static_cast<std::size_t>(h);
  std::size_t hi = std::min(lo + 1, values.size() - 1);
  double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

CategoryStats categorize_responses(const std::vector<ResponseSample>& samples) {
  if (samples.size() < 10)
    throw std::invalid_argument("categorize_responses: need at least 10 samples");
  std::vector<double> rs, cs, abs_cgpo, abs_grpo;
  for (const auto& s : samples) {
    rs.push_back(s.r);
    cs.push_back(s.c);
    abs_cgpo.push_back(std::abs(s.a_cgpo));
    abs_grpo.push_back(std::abs(s.a_grpo));
  }
  CategoryStats st;
  st.r_low = percentile(rs, 0.20);
  st.r_high = percentile(rs, 0.80);
  st.c_low = percentile(cs, 0.20);
  st.c_high = percentile(cs, 0.80);
  std::vector<double> norm_cgpo = rank_normalize(abs_cgpo);
  std::vector<double> norm_grpo = rank_normalize(abs_grpo);
  std::array<double, 4> sum_cgpo{}, sum_grpo{};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    bool hr = s.r >= st.r_high, lr = s.r <= st.r_low;
    bool hc = s.c >= st.c_high, lc = s.c <= st.c_low;
    int quadrant = -1;
    if (hr && hc)
      quadrant = 0;
    else if (hr && lc)
      quadrant = 1;
    else if (lr && hc)
      quadrant = 2;
    else if (lr && lc)
      quadrant = 3;
    if (quadrant < 0) continue;
    ++st.counts[quadrant];
    sum_cgpo[quadrant] += norm_cgpo[i];
    sum_grpo[quadrant] += norm_grpo[i];
  }
  for (int q = 0; q < 4; ++q) {
    if (st.counts[q] == 0) continue;
    st.mean_abs_cgpo[q] = sum_cgpo[q] / st.counts[q];
    st.mean_abs_grpo[q] = sum_grpo[q] / st.counts[q];
  }
  return st;
}

namespace {

void check_compatible(const TabularPolicy& policy, const World& world) {
  if (policy.vocab.tokens != world.vocab.tokens || policy.vocab.eos_id != world.vocab.eos_id)
    throw std::invalid_argument("train: policy and world vocabularies differ");
  if (policy.prompt_count != static_cast<int>(world.episodes.size()))
    throw std::invalid_argument("train: policy prompt count does not match episode count");
  if (policy.max_length != world.config.max_length)
    throw std::invalid_argument("train: policy horizon does not match world");
}

void apply_gradient(TabularPolicy& policy, int prompt, std::size_t positions,
                    const std::vector<double>& grad, double lr) {
  const int v = policy.vocab.size();
  for (std::size_t pos = 0; pos < positions; ++pos) {
    const std::size_t base = policy.index(prompt, static_cast<int>(pos), 0);
    for (int u = 0; u < v; ++u) policy.logits[base + u] += lr * grad[pos * v + u];
  }
}

}  // namespace

TrainingReport train(const TrainerConfig& config, const World& world, TabularPolicy& policy) {
  validate_config(config);
  check_compatible(policy, world);
  TrainingReport report;
  report.algorithm = config.algorithm;
  report.steps = config.steps;
  if (config.steps == 0) return report;

  std::mt19937_64 rng(config.seed);
  const TabularPolicy reference = policy;  // grpo's fixed anchor
  const int episode_count = static_cast<int>(world.episodes.size());
  const auto t0 = std::chrono::steady_clock::now();

  for (int step = 1; step <= config.steps; ++step) {
    const EpisodeSpec& ep = world.episodes[static_cast<std::size_t>(step - 1) % episode_count];
    StepRecord rec;
    rec.step = step;
    if (config.algorithm == Algorithm::cgpo) {
      rec.phase = isr_phase(step, config.schedule);
      if (rec.phase == Phase::rl) {
        Trajectory traj = sample(policy, ep.prompt, rng);
        RewardBreakdown b = score_response(world, ep, traj.decoded);
        double advantage = cgpo_advantage(b.r_total, traj.confidence);
        std::vector<double> grad = surrogate_logit_gradient(policy, ep.prompt, traj.tokens,
                                                            traj.probs, advantage, config.epsilon);
        std::vector<double> newp = token_probs(policy, ep.prompt, traj.tokens);
        SurrogateResult sur = clipped_surrogate(traj.probs, newp, advantage, config.epsilon);
        apply_gradient(policy, ep.prompt, traj.tokens.size(), grad, config.lr_rl);
        rec.reward = b.r_total;
        rec.confidence = traj.confidence;
        rec.advantage = advantage;
        rec.clipped_fraction = static_cast<double>(sur.clipped) / traj.tokens.size();
        report.traces += 1;
        report.reward_evaluations += 1;
      } else {
        sft_step(policy, ep.prompt, ep.golden_tokens, config.lr_sft);
      }
    } else {
      rec.phase = Phase::rl;
      std::vector<Trajectory> group;
      std::vector<double> rewards;
      for (int g = 0; g < config.group_size; ++g) {
        Trajectory traj = sample(policy, ep.prompt, rng);
        rewards.push_back(score_response(world, ep, traj.decoded).r_total);
        group.push_back(std::move(traj));
      }
      std::vector<double> advantages = grpo_advantages(rewards);
      const int v = policy.vocab.size();
      std::vector<double> mean_grad(static_cast<std::size_t>(policy.max_length) * v, 0.0);
      int clipped = 0;
      long tokens = 0;
      double mean_c = 0.0;
      for (int g = 0; g < config.group_size; ++g) {
        const Trajectory& traj = group[g];
        std::vector<double> grad = surrogate_logit_gradient(policy, ep.prompt, traj.tokens,
                                                            traj.probs, advantages[g],
                                                            config.epsilon);
        for (std::size_t i = 0; i < grad.size(); ++i) mean_grad[i] += grad[i];
        std::vector<double> newp = token_probs(policy, ep.prompt, traj.tokens);
        SurrogateResult sur = clipped_surrogate(traj.probs, newp, advantages[g], config.epsilon);
        clipped += sur.clipped;
        tokens += static_cast<long>(traj.tokens.size());
        mean_c += traj.confidence;
      }
      for (double& gv : mean_grad) gv /= config.group_size;
      std::vector<double> kl_grad = kl_logit_gradient(policy, reference, ep.prompt);
      for (std::size_t i = 0; i < mean_grad.size(); ++i)
        mean_grad[i] -= config.kl_beta * kl_grad[i];
      apply_gradient(policy, ep.prompt, static_cast<std::size_t>(policy.max_length), mean_grad,
                     config.lr_rl);
      double mean_r = 0.0, mean_a = 0.0;
      for (int g = 0; g < config.group_size; ++g) {
        mean_r += rewards[g];
        mean_a += advantages[g];
      }
      rec.reward = mean_r / config.group_size;
      rec.confidence = mean_c / config.group_size;
      rec.advantage = mean_a / config.group_size;
      rec.clipped_fraction = tokens > 0 ? static_cast<double>(clipped) / tokens : 0.0;
      report.traces += config.group_size;
      report.reward_evaluations += config.group_size;
    }
    report.records.push_back(rec);
  }

  const auto t1 = std::chrono::steady_clock::now();
  report.mean_step_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count() / config.steps;

  std::vector<double> rl_rewards;
  for (const auto& r : report.records)
    if (r.phase == Phase::rl) rl_rewards.push_back(r.reward);
  if (!rl_rewards.empty()) {
    std::size_t take = std::min<std::size_t>(100, rl_rewards.size());
    double sum = 0.0;
    for (std::size_t i = rl_rewards.size() - take; i < rl_rewards.size(); ++i)
      sum += rl_rewards[i];
    report.final_mean_reward = sum / static_cast<double>(take);
  }
  return report;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string report_lines(const TrainingReport& report) {
  std::string out;
  for (const auto& r : report.records) {
    out += "{\"step\":" + std::to_string(r.step);
    out += ",\"phase\":\"";
    out += r.phase == Phase::rl ? 'R' : 'S';
    out += "\",\"reward\":" + fmt6(r.reward);
    out += ",\"confidence\":" + fmt6(r.confidence);
    out += ",\"advantage\":" + fmt6(r.advantage);
    out += ",\"clipped_fraction\":" + fmt6(r.clipped_fraction);
    out += "}\n";
  }
  return out;
}

std::string report_summary(const TrainingReport& report) {
  std::string out = "{\"algorithm\":\"";
  out += algorithm_name(report.algorithm);
  out += "\",\"steps\":" + std::to_string(report.steps);
  out += ",\"traces\":" + std::to_string(report.traces);
  out += ",\"reward_evaluations\":" + std::to_string(report.reward_evaluations);
  out += ",\"mean_step_ms\":" + fmt6(report.mean_step_ms);
  out += ",\"final_mean_reward\":" + fmt6(report.final_mean_reward);
  out += "}\n";
  return out;
}

}  // namespace salrl
