#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "termkit/bleu.hpp"
#include "termkit/terminology.hpp"

namespace termkit {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// Position and width of the earliest arrow ("→" or "->") at or after `from`.
inline std::pair<std::size_t, std::size_t> find_arrow(std::string_view s,
                                                      std::size_t from = 0) {
  const std::size_t unicode_pos = s.find("→", from);
  const std::size_t ascii_pos = s.find("->", from);
  if (unicode_pos == std::string_view::npos && ascii_pos == std::string_view::npos) {
    return {std::string_view::npos, 0};
  }
  if (unicode_pos != std::string_view::npos &&
      (ascii_pos == std::string_view::npos || unicode_pos < ascii_pos)) {
    return {unicode_pos, 3};
  }
  return {ascii_pos, 2};
}

}  // namespace detail

// Extracts "source term → target term" items from a user instruction.
//
// The grammar, line by line: a line containing an arrow is a mapping line.
// Its mapping-list region starts after the last ": " preceding the first
// arrow (or at the line start) and runs to the end of the line, minus one
// trailing sentence period. Items are split on ", "; each item is divided
// at its first arrow ("→" or "->") and both terms are whitespace-trimmed.
// Results are deduplicated preserving order. Lines without arrows and items
// with an empty side contribute nothing.
inline TermMappingSet parse_mappings(std::string_view user_prompt) {
  TermMappingSet result;
  std::size_t line_start = 0;
  while (line_start <= user_prompt.size()) {
    std::size_t line_end = user_prompt.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = user_prompt.size();
    std::string_view line = user_prompt.substr(line_start, line_end - line_start);
    line_start = line_end + 1;
    if (line_end == user_prompt.size() && line.empty()) break;

    const auto [first_arrow, first_width] = detail::find_arrow(line);
    if (first_arrow == std::string_view::npos) continue;

    std::size_t region_start = 0;
    const std::size_t colon = line.rfind(": ", first_arrow);
    if (colon != std::string_view::npos) region_start = colon + 2;
    std::string_view region = line.substr(region_start);

    region = detail::trim(region);
    if (!region.empty() && region.back() == '.') {
      region.remove_suffix(1);
      region = detail::trim(region);
    }

    std::size_t item_start = 0;
    while (item_start <= region.size()) {
      std::size_t item_end = region.find(", ", item_start);
      if (item_end == std::string_view::npos) item_end = region.size();
      std::string_view item = region.substr(item_start, item_end - item_start);
      item_start = item_end + 2;

      const auto [arrow, width] = detail::find_arrow(item);
      if (arrow == std::string_view::npos) continue;
      std::string_view source = detail::trim(item.substr(0, arrow));
      std::string_view target = detail::trim(item.substr(arrow + width));
      if (source.empty() || target.empty()) continue;
      result.add(TermMapping{std::string(source), std::string(target), std::nullopt});
    }
  }
  return result;
}

// Per-mapping strict-match flags, aligned with M.
inline std::vector<bool> match_targets(std::string_view hypothesis,
                                       const TermMappingSet& mappings) {
  std::vector<bool> matched;
  matched.reserve(mappings.size());
  const std::string hyp_nfc = nfc(hypothesis);
  for (const auto& m : mappings) {
    matched.push_back(hyp_nfc.find(nfc(m.target_term)) != std::string::npos);
  }
  return matched;
}

// Constraint-following reward: the fraction of target terms present in the
// hypothesis, 1.0 when no terminology is specified.
inline double r_term(std::string_view hypothesis, const TermMappingSet& mappings) {
  if (mappings.empty()) return 1.0;
  const auto matched = match_targets(hypothesis, mappings);
  long count = 0;
  for (bool b : matched) count += b ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(mappings.size());
}

struct RewardWeights {
  double w_bleu = 0.5;
  double w_term = 0.5;

  void validate() const {
    if (w_bleu < 0.0 || w_term < 0.0 || w_bleu + w_term <= 0.0) {
      throw std::invalid_argument("reward weights must be non-negative with positive sum");
    }
  }
};

struct RewardBreakdown {
  double r_bleu = 0.0;
  double r_term = 0.0;
  double combined = 0.0;
  std::vector<bool> matched_terms;  // aligned with M
};

// Weighted combination of the BLEU reward and the terminology reward,
// normalized by the weight sum so the result stays in [0, 1].
inline RewardBreakdown combined_reward(std::string_view hypothesis,
                                       std::string_view reference,
                                       const TermMappingSet& mappings,
                                       const RewardWeights& weights = {}) {
  weights.validate();
  RewardBreakdown out;
  out.r_bleu = r_bleu(hypothesis, reference);
  out.matched_terms = match_targets(hypothesis, mappings);
  if (mappings.empty()) {
    out.r_term = 1.0;
  } else {
    long count = 0;
    for (bool b : out.matched_terms) count += b ? 1 : 0;
    out.r_term = static_cast<double>(count) / static_cast<double>(mappings.size());
  }
  out.combined = (weights.w_bleu * out.r_bleu + weights.w_term * out.r_term) /
                 (weights.w_bleu + weights.w_term);
  return out;
}

struct GroupRewards {
  std::vector<double> rewards;
  std::vector<double> advantages;
  double mean = 0.0;
  double stddev = 0.0;  // population
};

// Group-relative advantages: (r_i - mean) / (population std + epsilon).
inline GroupRewards group_advantages(std::span<const double> rewards,
                                     double epsilon = 1e-8) {
  if (rewards.size() < 2) throw std::invalid_argument("group too small");
  GroupRewards out;
  out.rewards.assign(rewards.begin(), rewards.end());
  // Zero-variance groups must produce exactly zero advantages; the guard
  // avoids summation rounding turning equal rewards into epsilon-scale noise.
  if (std::all_of(rewards.begin(), rewards.end(),
                  [&](double r) { return r == rewards.front(); })) {
    out.mean = rewards.front();
    out.stddev = 0.0;
    out.advantages.assign(rewards.size(), 0.0);
    return out;
  }
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= n;
  out.mean = mean;
  out.stddev = std::sqrt(var);
  out.advantages.reserve(rewards.size());
  for (double r : rewards) out.advantages.push_back((r - mean) / (out.stddev + epsilon));
  return out;
}

}  // namespace termkit
