#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "termkit/detail/sha256.hpp"
#include "termkit/rng.hpp"
#include "termkit/text_norm.hpp"
#include "termkit/unicode.hpp"

namespace termkit {

struct SentencePair {
  std::string source;
  std::string target;
  std::string pair_id;
  std::optional<double> similarity;
};

// Content-stable identifier: sampling results depend on pair content, never
// on input file ordering.
inline std::string make_pair_id(std::string_view source, std::string_view target) {
  std::string key;
  key.reserve(source.size() + target.size() + 1);
  key.append(source);
  key.push_back('\t');
  key.append(target);
  return detail::sha256_hex(key).substr(0, 16);
}

struct SimilarityScorer {
  virtual ~SimilarityScorer() = default;

  // Deterministic per input pair; must return a value in [0, 1].
  virtual double score(const std::string& source, const std::string& target) const = 0;

  // Batch hook; the default loops over score().
  virtual std::vector<double> score_many(const std::vector<SentencePair>& pairs) const {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(score(p.source, p.target));
    return out;
  }
};

// Offline fallback scorer: Dice coefficient over unique lowercased 13a
// tokens. Deliberately lexical; it is NOT equivalent to the neural
// sentence-embedding scorer that sits behind the HTTP client in production.
class LexicalDiceScorer final : public SimilarityScorer {
 public:
  double score(const std::string& source, const std::string& target) const override {
    auto tokens = [](const std::string& text) {
      std::vector<std::string> toks = tokenize(text).tokens;
      for (auto& t : toks) t = to_lower(t);
      std::sort(toks.begin(), toks.end());
      toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
      return toks;
    };
    const auto a = tokens(source);
    const auto b = tokens(target);
    if (a.empty() && b.empty()) return 0.0;
    std::size_t shared = 0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] == b[j]) {
        ++shared;
        ++i;
        ++j;
      } else if (a[i] < b[j]) {
        ++i;
      } else {
        ++j;
      }
    }
    return 2.0 * static_cast<double>(shared) / static_cast<double>(a.size() + b.size());
  }
};

// Client for an external embedding-similarity endpoint. One POST per batch:
//   request  {"pairs":[{"source":...,"target":...},...]}
//   response {"scores":[0.93,...]}
class HttpSimilarityScorer final : public SimilarityScorer {
 public:
  // url: http://host:port/path
  explicit HttpSimilarityScorer(const std::string& url, std::size_t batch_size = 64)
      : batch_size_(batch_size == 0 ? 1 : batch_size) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("bad scorer url: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    host_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  }

  double score(const std::string& source, const std::string& target) const override {
    return post_batch({SentencePair{source, target, "", std::nullopt}}).front();
  }

  std::vector<double> score_many(const std::vector<SentencePair>& pairs) const override {
    std::vector<double> out(pairs.size(), 0.0);
    for (std::size_t start = 0; start < pairs.size(); start += batch_size_) {
      const std::size_t end = std::min(pairs.size(), start + batch_size_);
      std::vector<SentencePair> batch(pairs.begin() + start, pairs.begin() + end);
      auto scores = post_batch(batch);
      std::copy(scores.begin(), scores.end(), out.begin() + start);
    }
    return out;
  }

 private:
  std::vector<double> post_batch(const std::vector<SentencePair>& batch) const {
    nlohmann::json body;
    body["pairs"] = nlohmann::json::array();
    for (const auto& p : batch) {
      body["pairs"].push_back({{"source", p.source}, {"target", p.target}});
    }
    httplib::Client client(host_);
    client.set_read_timeout(30, 0);
    auto res = client.Post(path_, body.dump(), "application/json");
    if (!res || res->status != 200) {
      throw std::runtime_error("similarity endpoint error" +
                               (res ? " (status " + std::to_string(res->status) + ")"
                                    : " (no response)"));
    }
    auto parsed = nlohmann::json::parse(res->body);
    std::vector<double> scores = parsed.at("scores").get<std::vector<double>>();
    if (scores.size() != batch.size()) {
      throw std::runtime_error("similarity endpoint returned wrong score count");
    }
    return scores;
  }

  std::string host_;
  std::string path_;
  std::size_t batch_size_;
};

struct FilterResult {
  std::vector<SentencePair> kept;
  std::size_t discarded_below_threshold = 0;
  std::size_t scorer_errors = 0;
};

// Keeps exactly the pairs scoring >= threshold (the boundary is inclusive:
// a score of exactly 0.9 under the default survives). Pairs whose scoring
// fails are dropped and counted separately from threshold discards.
// Scoring runs in bounded-size chunks on up to `workers` threads.
inline FilterResult filter_pairs(const std::vector<SentencePair>& pairs,
                                 const SimilarityScorer& scorer, double threshold = 0.9,
                                 std::size_t workers = 4) {
  if (threshold < 0.0 || threshold > 1.0) {
    throw std::invalid_argument("threshold must be in [0, 1]");
  }
  FilterResult result;
  if (pairs.empty()) return result;

  std::vector<std::optional<double>> scores(pairs.size());
  std::atomic<std::size_t> errors{0};

  const std::size_t chunk = 256;
  const std::size_t n_chunks = (pairs.size() + chunk - 1) / chunk;
  std::atomic<std::size_t> next_chunk{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t c = next_chunk.fetch_add(1);
      if (c >= n_chunks) return;
      const std::size_t start = c * chunk;
      const std::size_t end = std::min(pairs.size(), start + chunk);
      std::vector<SentencePair> batch(pairs.begin() + start, pairs.begin() + end);
      try {
        auto batch_scores = scorer.score_many(batch);
        for (std::size_t i = 0; i < batch_scores.size(); ++i) {
          scores[start + i] = batch_scores[i];
        }
      } catch (const std::exception&) {
        // Whole chunk failed; retry pairs one by one so a single bad pair
        // does not discard its neighbours.
        for (std::size_t i = start; i < end; ++i) {
          try {
            scores[i] = scorer.score(pairs[i].source, pairs[i].target);
          } catch (const std::exception&) {
            errors.fetch_add(1);
          }
        }
      }
    }
  };

  const std::size_t n_threads = std::max<std::size_t>(1, std::min(workers, n_chunks));
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  result.scorer_errors = errors.load();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!scores[i]) continue;
    if (*scores[i] >= threshold) {
      SentencePair kept = pairs[i];
      kept.similarity = *scores[i];
      result.kept.push_back(std::move(kept));
    } else {
      ++result.discarded_below_threshold;
    }
  }
  return result;
}

struct SplitResult {
  std::vector<SentencePair> sft;
  std::vector<SentencePair> grpo;
};

// Disjoint uniform samples without replacement. Pairs are sorted by
// (pair_id, source, target) before the seeded shuffle, so a given seed
// selects the same content regardless of input order.
inline SplitResult sample_split(const std::vector<SentencePair>& pairs,
                                std::size_t n_sft = 10000, std::size_t n_grpo = 1000,
                                std::uint64_t seed = 0) {
  if (pairs.size() < n_sft + n_grpo) {
    throw std::invalid_argument(
        "not enough pairs to sample: need " + std::to_string(n_sft + n_grpo) + ", have " +
        std::to_string(pairs.size()) + " (short by " +
        std::to_string(n_sft + n_grpo - pairs.size()) + ")");
  }
  std::vector<SentencePair> sorted = pairs;
  std::sort(sorted.begin(), sorted.end(), [](const SentencePair& a, const SentencePair& b) {
    if (a.pair_id != b.pair_id) return a.pair_id < b.pair_id;
    if (a.source != b.source) return a.source < b.source;
    return a.target < b.target;
  });

  Rng rng(seed);
  rng.shuffle(sorted);

  SplitResult out;
  out.sft.assign(sorted.begin(), sorted.begin() + n_sft);
  out.grpo.assign(sorted.begin() + n_sft, sorted.begin() + n_sft + n_grpo);
  return out;
}

// --- pair file I/O ----------------------------------------------------------
//
// Tab-separated, one pair per line: source, target, and optionally the
// recorded similarity score.

inline std::vector<SentencePair> read_pairs(std::istream& in) {
  std::vector<SentencePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    if (tab1 == std::string::npos) {
      throw std::runtime_error("pairs line " + std::to_string(line_no) +
                               ": expected 2 or 3 tab-separated fields");
    }
    const auto tab2 = line.find('\t', tab1 + 1);
    SentencePair p;
    p.source = line.substr(0, tab1);
    if (tab2 == std::string::npos) {
      p.target = line.substr(tab1 + 1);
    } else {
      if (line.find('\t', tab2 + 1) != std::string::npos) {
        throw std::runtime_error("pairs line " + std::to_string(line_no) +
                                 ": expected 2 or 3 tab-separated fields");
      }
      p.target = line.substr(tab1 + 1, tab2 - tab1 - 1);
      try {
        p.similarity = std::stod(line.substr(tab2 + 1));
      } catch (const std::exception&) {
        throw std::runtime_error("pairs line " + std::to_string(line_no) +
                                 ": bad similarity value");
      }
    }
    if (p.source.empty() || p.target.empty()) {
      throw std::runtime_error("pairs line " + std::to_string(line_no) + ": empty field");
    }
    p.pair_id = make_pair_id(p.source, p.target);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

inline void write_pairs(const std::vector<SentencePair>& pairs, std::ostream& out) {
  for (const auto& p : pairs) {
    out << p.source << '\t' << p.target;
    if (p.similarity) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", *p.similarity);
      out << '\t' << buf;
    }
    out << '\n';
  }
}

}  // namespace termkit
