#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "termkit/text_norm.hpp"

namespace termkit {

struct BleuScore {
  double score = 0.0;                // [0, 100]
  std::vector<double> precisions;    // smoothed, as fractions in [0, 1]
  double brevity_penalty = 1.0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
};

namespace detail {

// n-grams keyed as length-prefixed token joins; '\x1f' never occurs in
// tokens because it is padded away by the tokenizer.
inline std::unordered_map<std::string, long> ngram_counts(
    const std::vector<std::string>& tokens, std::size_t order) {
  std::unordered_map<std::string, long> counts;
  if (tokens.size() < order) return counts;
  for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < order; ++k) {
      if (k) key.push_back('\x1f');
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace detail

// Sentence-level BLEU with clipped modified precisions, the exponential
// smoothing scheme for zero-count orders (the k-th zero-count order gets
// numerator 1/2^k), and effective order capped at the hypothesis length.
inline BleuScore sentence_bleu(const TokenizedSentence& hypothesis,
                               const TokenizedSentence& reference, int max_order = 4) {
  if (max_order < 1) throw std::invalid_argument("max_order must be >= 1");
  if (reference.empty()) throw std::invalid_argument("empty reference");

  BleuScore out;
  out.hyp_len = hypothesis.size();
  out.ref_len = reference.size();
  out.precisions.assign(static_cast<std::size_t>(max_order), 0.0);

  if (hypothesis.empty()) {
    // Degenerate case: score 0, brevity penalty clamped to the smallest
    // positive double (exp(1 - ref_len/eps) underflows for any real input).
    out.score = 0.0;
    out.brevity_penalty = std::numeric_limits<double>::min();
    return out;
  }

  const std::size_t effective_order =
      std::min<std::size_t>(static_cast<std::size_t>(max_order), hypothesis.size());

  double log_precision_sum = 0.0;
  double smooth = 1.0;
  for (std::size_t n = 1; n <= effective_order; ++n) {
    auto hyp_counts = detail::ngram_counts(hypothesis.tokens, n);
    auto ref_counts = detail::ngram_counts(reference.tokens, n);
    long total = 0;
    long correct = 0;
    for (const auto& [gram, count] : hyp_counts) {
      total += count;
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) correct += std::min(count, it->second);
    }
    double precision;
    if (correct == 0) {
      smooth *= 2.0;
      precision = 1.0 / (smooth * static_cast<double>(total));
    } else {
      precision = static_cast<double>(correct) / static_cast<double>(total);
    }
    out.precisions[n - 1] = precision;
    log_precision_sum += std::log(precision);
  }

  out.brevity_penalty =
      out.hyp_len < out.ref_len
          ? std::exp(1.0 - static_cast<double>(out.ref_len) / static_cast<double>(out.hyp_len))
          : 1.0;
  out.score = out.brevity_penalty *
              std::exp(log_precision_sum / static_cast<double>(effective_order)) * 100.0;
  return out;
}

// BLEU-based reward: sentence BLEU over normalized 13a tokens, scaled to [0, 1].
inline double r_bleu(std::string_view hypothesis, std::string_view reference) {
  return sentence_bleu(tokenize(hypothesis), tokenize(reference)).score / 100.0;
}

}  // namespace termkit
