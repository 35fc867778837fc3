#pragma once

#include <algorithm>
#include <cstddef>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "termkit/rng.hpp"
#include "termkit/text_norm.hpp"
#include "termkit/unicode.hpp"

namespace termkit {

// Half-open token index range into a tokenized sentence.
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const TokenRange&) const = default;
};

struct TermMapping {
  std::string source_term;
  std::string target_term;
  std::optional<TokenRange> source_span;

  bool operator==(const TermMapping&) const = default;
};

// Ordered constraint set, deduplicated by (source_term, target_term).
struct TermMappingSet {
  std::vector<TermMapping> mappings;

  bool add(TermMapping m) {
    for (const auto& existing : mappings) {
      if (existing.source_term == m.source_term && existing.target_term == m.target_term) {
        return false;
      }
    }
    mappings.push_back(std::move(m));
    return true;
  }

  std::size_t size() const { return mappings.size(); }
  bool empty() const { return mappings.empty(); }
  auto begin() const { return mappings.begin(); }
  auto end() const { return mappings.end(); }

  std::vector<std::pair<std::string, std::string>> pairs() const {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(mappings.size());
    for (const auto& m : mappings) out.emplace_back(m.source_term, m.target_term);
    return out;
  }

  bool operator==(const TermMappingSet& other) const { return pairs() == other.pairs(); }
};

struct DictionaryEntry {
  std::string source_text;                      // normalized, space-joined form
  std::vector<std::string> source_tokens;
  std::vector<std::string> source_tokens_lower;
  std::vector<std::string> targets;             // normalized texts, file order
  std::vector<std::string> first_target_tokens; // tokens of targets[0]
};

class Dictionary {
 public:
  Dictionary() = default;
  Dictionary(std::string source_lang, std::string target_lang)
      : source_lang_(std::move(source_lang)), target_lang_(std::move(target_lang)) {}

  const std::string& source_lang() const { return source_lang_; }
  const std::string& target_lang() const { return target_lang_; }
  const std::vector<DictionaryEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // Adds one term pair; both texts must already be normalized. Returns the
  // entry the target was attached to.
  DictionaryEntry& add(const std::string& source_text, const std::string& target_text) {
    auto it = by_source_.find(source_text);
    if (it == by_source_.end()) {
      DictionaryEntry entry;
      entry.source_text = source_text;
      entry.source_tokens = tokenize_13a(source_text).tokens;
      entry.source_tokens_lower.reserve(entry.source_tokens.size());
      for (const auto& tok : entry.source_tokens) {
        entry.source_tokens_lower.push_back(to_lower(tok));
      }
      entry.targets.push_back(target_text);
      entry.first_target_tokens = tokenize_13a(target_text).tokens;
      entries_.push_back(std::move(entry));
      const std::size_t id = entries_.size() - 1;
      by_source_.emplace(source_text, id);
      by_first_token_[entries_[id].source_tokens.front()].push_back(id);
      by_first_token_lower_[entries_[id].source_tokens_lower.front()].push_back(id);
      return entries_[id];
    }
    DictionaryEntry& entry = entries_[it->second];
    if (std::find(entry.targets.begin(), entry.targets.end(), target_text) ==
        entry.targets.end()) {
      entry.targets.push_back(target_text);
    }
    return entry;
  }

  const std::vector<std::size_t>* entries_starting_with(const std::string& token,
                                                        bool case_insensitive) const {
    const auto& index = case_insensitive ? by_first_token_lower_ : by_first_token_;
    auto it = index.find(token);
    return it == index.end() ? nullptr : &it->second;
  }

  // Entry whose source is exactly the given single token, if any.
  const DictionaryEntry* single_token_entry(const std::string& token,
                                            bool case_insensitive) const {
    const auto* ids = entries_starting_with(token, case_insensitive);
    if (!ids) return nullptr;
    for (std::size_t id : *ids) {
      if (entries_[id].source_tokens.size() == 1) return &entries_[id];
    }
    return nullptr;
  }

 private:
  std::string source_lang_;
  std::string target_lang_;
  std::vector<DictionaryEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_source_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_first_token_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_first_token_lower_;
};

struct DictionaryLoadResult {
  Dictionary dictionary;
  std::size_t skipped_too_long = 0;
};

inline constexpr std::size_t kMaxTermTokens = 5;

// Reads a UTF-8 tab-separated bilingual lexicon: one "source<TAB>target"
// pair per line, no header. Entries longer than five 13a tokens on either
// side are skipped and counted; malformed lines abort with the line number.
inline DictionaryLoadResult load_dictionary(std::istream& in, std::string source_lang,
                                            std::string target_lang) {
  DictionaryLoadResult result;
  result.dictionary = Dictionary(std::move(source_lang), std::move(target_lang));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first_tab = line.find('\t');
    if (first_tab == std::string::npos || line.find('\t', first_tab + 1) != std::string::npos) {
      throw std::runtime_error("dictionary line " + std::to_string(line_no) +
                               ": expected exactly 2 tab-separated fields");
    }
    const std::string source = normalize(line.substr(0, first_tab));
    const std::string target = normalize(line.substr(first_tab + 1));
    if (source.empty() || target.empty()) {
      throw std::runtime_error("dictionary line " + std::to_string(line_no) +
                               ": empty field");
    }
    const auto source_tokens = tokenize_13a(source).tokens;
    const auto target_tokens = tokenize_13a(target).tokens;
    if (source_tokens.size() > kMaxTermTokens || target_tokens.size() > kMaxTermTokens) {
      ++result.skipped_too_long;
      continue;
    }
    result.dictionary.add(source, target);
  }
  return result;
}

namespace detail {

inline bool contains_token_seq(const std::vector<std::string>& haystack,
                               const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool all = true;
    for (std::size_t k = 0; k < needle.size(); ++k) {
      if (haystack[i + k] != needle[k]) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

struct MatchCandidate {
  std::size_t start = 0;
  std::size_t length = 0;
  std::size_t entry_id = 0;
};

}  // namespace detail

// Greedy longest-match-first terminology annotation. Dictionary entries are
// matched as contiguous token sequences of the source; longer matches claim
// their spans first, ties broken left to right. When a reference is given
// (training-data annotation), an entry is only a candidate if its first
// target occurs as an exact-case contiguous token sequence of the reference,
// so the emitted constraint is guaranteed to hold on the reference under
// strict matching. Each (source term, target term) pair is emitted once.
inline TermMappingSet match_terms(std::string_view source,
                                  std::optional<std::string_view> reference,
                                  const Dictionary& dict, bool case_insensitive = true) {
  TermMappingSet result;
  const TokenizedSentence src = tokenize(source);
  if (src.empty() || dict.empty()) return result;

  std::vector<std::string> src_cmp = src.tokens;
  if (case_insensitive) {
    for (auto& tok : src_cmp) tok = to_lower(tok);
  }

  std::optional<std::vector<std::string>> ref_tokens;
  if (reference) ref_tokens = tokenize(*reference).tokens;

  std::vector<bool> target_ok(dict.entries().size(), true);
  if (ref_tokens) {
    for (std::size_t id = 0; id < dict.entries().size(); ++id) {
      target_ok[id] =
          detail::contains_token_seq(*ref_tokens, dict.entries()[id].first_target_tokens);
    }
  }

  std::vector<detail::MatchCandidate> candidates;
  for (std::size_t i = 0; i < src_cmp.size(); ++i) {
    const auto* ids = dict.entries_starting_with(src_cmp[i], case_insensitive);
    if (!ids) continue;
    for (std::size_t id : *ids) {
      const auto& entry = dict.entries()[id];
      const auto& entry_tokens =
          case_insensitive ? entry.source_tokens_lower : entry.source_tokens;
      if (i + entry_tokens.size() > src_cmp.size()) continue;
      bool all = true;
      for (std::size_t k = 0; k < entry_tokens.size(); ++k) {
        if (src_cmp[i + k] != entry_tokens[k]) {
          all = false;
          break;
        }
      }
      if (!all) continue;
      if (!target_ok[id]) continue;
      candidates.push_back({i, entry_tokens.size(), id});
    }
  }

  std::sort(candidates.begin(), candidates.end(),
            [](const detail::MatchCandidate& a, const detail::MatchCandidate& b) {
              if (a.length != b.length) return a.length > b.length;
              if (a.start != b.start) return a.start < b.start;
              return a.entry_id < b.entry_id;
            });

  std::vector<bool> used(src_cmp.size(), false);
  std::vector<TermMapping> accepted;
  for (const auto& cand : candidates) {
    bool free = true;
    for (std::size_t i = cand.start; i < cand.start + cand.length; ++i) {
      if (used[i]) {
        free = false;
        break;
      }
    }
    if (!free) continue;
    for (std::size_t i = cand.start; i < cand.start + cand.length; ++i) used[i] = true;
    const auto& entry = dict.entries()[cand.entry_id];
    accepted.push_back(TermMapping{entry.source_text, entry.targets.front(),
                                   TokenRange{cand.start, cand.start + cand.length}});
  }

  std::sort(accepted.begin(), accepted.end(), [](const TermMapping& a, const TermMapping& b) {
    return a.source_span->begin < b.source_span->begin;
  });
  for (auto& m : accepted) result.add(std::move(m));
  return result;
}

enum class AnnotateMode { append, none };

// Inserts each mapping's target term directly after its matched source term.
// The source is normalized first so span offsets line up with match_terms
// output; mode none returns the input untouched.
inline std::string inline_annotate(std::string_view source, const TermMappingSet& mappings,
                                   AnnotateMode mode) {
  if (mode == AnnotateMode::none) return std::string(source);
  const std::string norm = normalize(source);
  const TokenizedSentence ts = tokenize_13a(norm);

  struct Insertion {
    std::size_t offset;
    const std::string* text;
  };
  std::vector<Insertion> insertions;
  for (const auto& m : mappings) {
    if (!m.source_span) {
      throw std::invalid_argument("unanchored mapping: " + m.source_term);
    }
    if (m.source_span->end == 0 || m.source_span->end > ts.size() ||
        m.source_span->begin >= m.source_span->end) {
      throw std::out_of_range("mapping span out of range: " + m.source_term);
    }
    insertions.push_back({ts.char_spans[m.source_span->end - 1].end, &m.target_term});
  }
  std::sort(insertions.begin(), insertions.end(),
            [](const Insertion& a, const Insertion& b) { return a.offset < b.offset; });

  std::string out;
  out.reserve(norm.size() + insertions.size() * 16);
  std::size_t pos = 0;
  for (const auto& ins : insertions) {
    out.append(norm, pos, ins.offset - pos);
    out.push_back(' ');
    out.append(*ins.text);
    pos = ins.offset;
  }
  out.append(norm, pos, norm.size() - pos);
  return out;
}

// Samples up to k distinct dictionary-covered source tokens (tokens with at
// least one letter) and pairs each with its dictionary translation.
// Deterministic for a given seed.
inline TermMappingSet draw_random_terms(std::string_view source, const Dictionary& dict,
                                        std::size_t k, std::uint64_t seed) {
  TermMappingSet result;
  if (k == 0 || dict.empty()) return result;
  const TokenizedSentence src = tokenize(source);

  struct Candidate {
    const DictionaryEntry* entry;
    std::size_t token_index;
  };
  std::vector<Candidate> candidates;
  std::vector<const DictionaryEntry*> seen;
  for (std::size_t i = 0; i < src.tokens.size(); ++i) {
    if (!has_letter(src.tokens[i])) continue;
    const DictionaryEntry* entry = dict.single_token_entry(to_lower(src.tokens[i]), true);
    if (!entry) continue;
    if (std::find(seen.begin(), seen.end(), entry) != seen.end()) continue;
    seen.push_back(entry);
    candidates.push_back({entry, i});
  }
  if (candidates.empty()) return result;

  Rng rng(seed);
  for (std::size_t idx : rng.sample_indices(candidates.size(), k)) {
    const auto& cand = candidates[idx];
    result.add(TermMapping{cand.entry->source_text, cand.entry->targets.front(),
                           TokenRange{cand.token_index, cand.token_index + 1}});
  }
  return result;
}

// The strict-match predicate shared by rewards and evaluation: the target
// term occurs verbatim (case-sensitive) as a substring of the hypothesis,
// both sides NFC-normalized.
inline bool strict_match(std::string_view hypothesis, std::string_view target_term) {
  if (target_term.empty()) throw std::invalid_argument("empty target term");
  return nfc(hypothesis).find(nfc(target_term)) != std::string::npos;
}

// Micro-averaged terminology accuracy: matched target terms over all target
// terms across the record set.
inline double term_accuracy(
    const std::vector<std::pair<std::string, TermMappingSet>>& records) {
  long total = 0;
  long matched = 0;
  for (const auto& [hypothesis, mappings] : records) {
    if (mappings.empty()) continue;
    const std::string hyp_nfc = nfc(hypothesis);
    for (const auto& m : mappings) {
      ++total;
      if (hyp_nfc.find(nfc(m.target_term)) != std::string::npos) ++matched;
    }
  }
  if (total == 0) throw std::runtime_error("no terms to score");
  return static_cast<double>(matched) / static_cast<double>(total);
}

}  // namespace termkit
