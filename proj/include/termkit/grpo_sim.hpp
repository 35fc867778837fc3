#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "termkit/instruction_gen.hpp"
#include "termkit/reward.hpp"
#include "termkit/rng.hpp"

namespace termkit {

// Finite stand-in for a generator's output distribution: one fixed candidate
// pool per source sentence.
struct CandidatePool {
  std::string source;
  std::string reference;
  TermMappingSet mappings;
  std::vector<std::string> candidates;

  void validate() const {
    if (candidates.size() < 2) {
      throw std::invalid_argument("candidate pool needs at least 2 candidates");
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      for (std::size_t j = i + 1; j < candidates.size(); ++j) {
        if (candidates[i] == candidates[j]) {
          throw std::invalid_argument("candidate pool has duplicate candidates");
        }
      }
    }
  }
};

// Categorical softmax policy over each pool's candidates.
struct Policy {
  std::vector<std::vector<double>> logits;  // one vector per pool
  double temperature = 1.0;

  std::vector<double> probabilities(std::size_t pool_index) const {
    const auto& l = logits[pool_index];
    std::vector<double> p(l.size());
    double max_logit = *std::max_element(l.begin(), l.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) {
      p[i] = std::exp((l[i] - max_logit) / temperature);
      sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
  }

  double entropy(std::size_t pool_index) const {
    double h = 0.0;
    for (double p : probabilities(pool_index)) {
      if (p > 0.0) h -= p * std::log(p);
    }
    return h;
  }
};

inline Policy init_policy(const std::vector<CandidatePool>& pools) {
  if (pools.empty()) throw std::invalid_argument("no candidate pools");
  Policy policy;
  policy.logits.reserve(pools.size());
  for (const auto& pool : pools) {
    pool.validate();
    policy.logits.emplace_back(pool.candidates.size(), 0.0);
  }
  return policy;
}

struct GrpoOptions {
  int group_size = 16;
  RewardWeights weights{};
  double learning_rate = 0.1;
  double advantage_epsilon = 1e-8;
  // Optional pull of logits back to their uniform initialization; 0 = off.
  double l2_to_init = 0.0;
};

struct StepStats {
  double mean_reward = 0.0;
  double mean_r_term = 0.0;
  double mean_r_bleu = 0.0;
  double mean_entropy = 0.0;
};

struct TrainTrace {
  std::vector<StepStats> steps;
};

namespace detail {

inline std::vector<RewardBreakdown> pool_candidate_rewards(const CandidatePool& pool,
                                                           const RewardWeights& weights) {
  std::vector<RewardBreakdown> rewards;
  rewards.reserve(pool.candidates.size());
  for (const auto& candidate : pool.candidates) {
    rewards.push_back(combined_reward(candidate, pool.reference, pool.mappings, weights));
  }
  return rewards;
}

}  // namespace detail

// One GRPO step: per pool, draw G candidates from the policy, score them,
// normalize rewards within the group and ascend the score-function gradient
//   logit_j += lr * sum_i A_i * (1[c_i == j] - p_j) / G.
// The per-pool RNG stream is derived from (step_seed, pool index), so pools
// may be processed in any order or in parallel without changing results.
inline StepStats grpo_step(Policy& policy, const std::vector<CandidatePool>& pools,
                           const GrpoOptions& opts, std::uint64_t step_seed) {
  if (opts.group_size < 2) throw std::invalid_argument("group size must be >= 2");
  if (opts.learning_rate <= 0.0) throw std::invalid_argument("learning rate must be positive");
  if (pools.size() != policy.logits.size()) {
    throw std::invalid_argument("policy does not match pool count");
  }
  opts.weights.validate();

  StepStats stats;
  const std::size_t g = static_cast<std::size_t>(opts.group_size);
  for (std::size_t pool_idx = 0; pool_idx < pools.size(); ++pool_idx) {
    const auto& pool = pools[pool_idx];
    const auto probs = policy.probabilities(pool_idx);
    const auto candidate_rewards = detail::pool_candidate_rewards(pool, opts.weights);

    Rng rng(mix_seed(step_seed, pool_idx));
    std::vector<std::size_t> draws(g);
    std::vector<double> rewards(g);
    for (std::size_t i = 0; i < g; ++i) {
      draws[i] = rng.categorical(probs);
      const auto& r = candidate_rewards[draws[i]];
      rewards[i] = r.combined;
      stats.mean_reward += r.combined;
      stats.mean_r_term += r.r_term;
      stats.mean_r_bleu += r.r_bleu;
    }

    const auto group = group_advantages(rewards, opts.advantage_epsilon);
    auto& logits = policy.logits[pool_idx];
    std::vector<double> update(logits.size(), 0.0);
    for (std::size_t i = 0; i < g; ++i) {
      const double a = group.advantages[i];
      for (std::size_t j = 0; j < logits.size(); ++j) {
        const double indicator = (draws[i] == j) ? 1.0 : 0.0;
        update[j] += a * (indicator - probs[j]);
      }
    }
    for (std::size_t j = 0; j < logits.size(); ++j) {
      logits[j] += opts.learning_rate * update[j] / static_cast<double>(g);
      if (opts.l2_to_init > 0.0) {
        logits[j] -= opts.learning_rate * opts.l2_to_init * logits[j];
      }
    }
    stats.mean_entropy += policy.entropy(pool_idx);
  }

  const double samples = static_cast<double>(pools.size() * g);
  stats.mean_reward /= samples;
  stats.mean_r_term /= samples;
  stats.mean_r_bleu /= samples;
  stats.mean_entropy /= static_cast<double>(pools.size());
  return stats;
}

// Iterates grpo_step, recording one trace row per step. Step s uses the
// stream seed mix(global_seed, s).
inline std::pair<Policy, TrainTrace> train(Policy policy,
                                           const std::vector<CandidatePool>& pools,
                                           int steps, const GrpoOptions& opts,
                                           std::uint64_t global_seed) {
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  TrainTrace trace;
  trace.steps.reserve(static_cast<std::size_t>(steps));
  for (int s = 0; s < steps; ++s) {
    trace.steps.push_back(grpo_step(policy, pools, opts, mix_seed(global_seed, s)));
  }
  return {std::move(policy), std::move(trace)};
}

// --- serialization ---------------------------------------------------------

inline void to_json(nlohmann::json& j, const CandidatePool& p) {
  j = nlohmann::json{{"source", p.source},
                     {"reference", p.reference},
                     {"mappings", p.mappings},
                     {"candidates", p.candidates}};
}

inline void from_json(const nlohmann::json& j, CandidatePool& p) {
  j.at("source").get_to(p.source);
  j.at("reference").get_to(p.reference);
  j.at("mappings").get_to(p.mappings);
  j.at("candidates").get_to(p.candidates);
}

inline std::vector<CandidatePool> read_pools(std::istream& in) {
  std::vector<CandidatePool> pools;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto pool = nlohmann::json::parse(line).get<CandidatePool>();
      pool.validate();
      pools.push_back(std::move(pool));
    } catch (const std::exception& e) {
      throw std::runtime_error("pools line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return pools;
}

inline void write_pools(const std::vector<CandidatePool>& pools, std::ostream& out) {
  for (const auto& p : pools) out << nlohmann::json(p).dump() << '\n';
}

// Trace rows as a tab-separated table, one row per step.
inline void write_trace_tsv(const TrainTrace& trace, std::ostream& out) {
  out << "step\tmean_reward\tmean_r_bleu\tmean_r_term\tmean_entropy\n";
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    out << i << '\t' << s.mean_reward << '\t' << s.mean_r_bleu << '\t' << s.mean_r_term
        << '\t' << s.mean_entropy << '\n';
  }
}

}  // namespace termkit
