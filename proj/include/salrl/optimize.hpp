// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "salrl/policy.hpp"
#include "salrl/world.hpp"

namespace salrl {

enum class Algorithm { cgpo, grpo };
enum class Phase { rl, sft };

Algorithm algorithm_from_string(const std::string& name);
const char* algorithm_name(Algorithm a);

struct TrainerConfig {
  Algorithm algorithm = Algorithm::cgpo;
  int group_size = 8;             // grpo rollouts per step
  double epsilon = 0.2;           // ratio clip half-width
  double kl_beta = 0.04;          // grpo reference penalty weight
  std::string schedule = "RRRSS";  // cgpo phase pattern
  double lr_rl = 0.05;
  double lr_sft = 0.1;
  int steps = 0;
  std::uint64_t seed = 1;
};

void validate_config(const TrainerConfig& config);

// Signed calibration error: reward minus confidence.
double cgpo_advantage(double r, double c);

// Negative gradient of the cross-entropy between r and c; kept as a tested
// derivation artifact, not used by the trainer itself.
double bce_gradient_check(double r, double c);

// Group-normalized advantages with population sigma; a uniform group has no
// signal and maps to all zeros.
std::vector<double> grpo_advantages(const std::vector<double>& rewards);

struct SurrogateResult {
  double objective = 0.0;
  std::vector<double> dobj_dnew;  // per-token derivative; zero where clipped
  int clipped = 0;                // tokens where the clipped branch was strictly lower
};

// Mean over tokens of min(rho*A, clip(rho, 1-eps, 1+eps)*A), rho = new/old.
SurrogateResult clipped_surrogate(const std::vector<double>& old_probs,
                                  const std::vector<double>& new_probs, double advantage,
                                  double epsilon);

// Gradient of the surrogate w.r.t. the logit rows the trajectory touches,
// flattened [position][token]; evaluated at the policy's current logits.
std::vector<double> surrogate_logit_gradient(const TabularPolicy& policy, int prompt,
                                             const std::vector<int>& tokens,
                                             const std::vector<double>& old_probs,
                                             double advantage, double epsilon);

// Gradient of kl_divergence(policy || reference) w.r.t. the policy's logits
// for one prompt, flattened [position][token].
std::vector<double> kl_logit_gradient(const TabularPolicy& policy,
                                      const TabularPolicy& reference, int prompt);

// 1-based schedule lookup: step s runs schedule[(s-1) mod len].
Phase isr_phase(int step, const std::string& schedule);

// Rank k of n (ties averaged) maps to 2*(k-1)/(n-1) - 1.
std::vector<double> rank_normalize(const std::vector<double>& values);

struct ResponseSample {
  double r = 0.0;
  double c = 0.0;
  double a_cgpo = 0.0;
  double a_grpo = 0.0;
};

// Quadrant order everywhere: HrHc, HrLc, LrHc, LrLc.
struct CategoryStats {
  double r_low = 0.0, r_high = 0.0, c_low = 0.0, c_high = 0.0;
  std::array<int, 4> counts{};
  std::array<double, 4> mean_abs_cgpo{};
  std::array<double, 4> mean_abs_grpo{};
};

// Corner classification against the 20th/80th percentiles of r and c; the
// middle band belongs to no quadrant. Mean |A| is taken after rank
// normalization over the full sample list.
CategoryStats categorize_responses(const std::vector<ResponseSample>& samples);

double percentile(std::vector<double> values, double p);  // linear interpolation

struct StepRecord {
  int step = 0;
  Phase phase = Phase::rl;
  double reward = 0.0;      // group mean for grpo
  double confidence = 0.0;  // group mean for grpo
  double advantage = 0.0;
  double clipped_fraction = 0.0;
};

struct TrainingReport {
  Algorithm algorithm = Algorithm::cgpo;
  int steps = 0;
  long traces = 0;
  long reward_evaluations = 0;
  double mean_step_ms = 0.0;
  double final_mean_reward = 0.0;  // over the final (up to) 100 RL steps
  std::vector<StepRecord> records;
};

// Round-robin over world episodes; deterministic in (config.seed, world).
TrainingReport train(const TrainerConfig& config, const World& world, TabularPolicy& policy);

// Line-delimited step records. Deliberately free of wall-clock fields so
// reruns are byte-identical.
std::string report_lines(const TrainingReport& report);
std::string report_summary(const TrainingReport& report);

// Fixed six-decimal rendering used by every emitted report.
std::string fmt6(double v);

}  // namespace salrl
