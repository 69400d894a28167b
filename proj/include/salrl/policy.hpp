// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <string>
#include <vector>

namespace salrl {

struct Vocabulary {
  std::vector<std::string> tokens;  // distinct, single-line, whitespace-free
  int eos_id = -1;

  int size() const { return static_cast<int>(tokens.size()); }
  int find(const std::string& token) const;  // -1 when absent

  // Tag tokens the response grammar understands, then content words, then eos.
  static Vocabulary standard(const std::vector<std::string>& content_tokens);
};

void validate_vocabulary(const Vocabulary& vocab);

// Categorical policy with one logit row per (prompt, position). Positions
// stand in for the generation context; everything downstream sees only
// per-token probabilities, so the factorization is invisible to the trainer.
struct TabularPolicy {
  int prompt_count = 0;
  int max_length = 0;
  Vocabulary vocab;
  std::vector<double> logits;  // flattened [prompt][position][token]

  static TabularPolicy zeros(int prompt_count, int max_length, Vocabulary vocab);

  std::size_t index(int prompt, int pos, int token) const;
  double logit(int prompt, int pos, int token) const { return logits[index(prompt, pos, token)]; }
  double& logit(int prompt, int pos, int token) { return logits[index(prompt, pos, token)]; }
  std::vector<double> distribution(int prompt, int pos) const;  // softmax row
};

struct Trajectory {
  int prompt = 0;
  std::vector<int> tokens;    // ends at eos or max_length
  std::vector<double> probs;  // generation probabilities frozen at draw time
  std::string decoded;        // non-eos fragments joined by single spaces
  double reward = 0.0;
  double confidence = 0.0;    // mean of probs
};

// Uniform double in [0,1) from the top 53 bits of the generator.
double uniform_double(std::mt19937_64& rng);

inline constexpr double kProbFloor = 1e-9;

Trajectory sample(const TabularPolicy& policy, int prompt, std::mt19937_64& rng);

// Probability of each given token at its position, floored like sampling.
std::vector<double> token_probs(const TabularPolicy& policy, int prompt,
                                const std::vector<int>& tokens);

double confidence(const Trajectory& traj);

std::string decode(const Vocabulary& vocab, const std::vector<int>& tokens);

// One ascent step on the golden sequence's log-likelihood.
void sft_step(TabularPolicy& policy, int prompt, const std::vector<int>& golden, double lr);

double golden_probability(const TabularPolicy& policy, int prompt,
                          const std::vector<int>& golden);

// Sum over positions of exact categorical KL(policy row || reference row).
double kl_divergence(const TabularPolicy& policy, const TabularPolicy& reference, int prompt);

void save_policy(const TabularPolicy& policy, const std::string& path);
TabularPolicy load_policy(const std::string& path);

}  // namespace salrl
