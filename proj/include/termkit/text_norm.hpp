#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "termkit/unicode.hpp"

namespace termkit {

struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive, byte offsets into the normalized text

  bool operator==(const CharSpan&) const = default;
};

struct TokenizedSentence {
  std::string raw;  // normalized text the spans index into
  std::vector<std::string> tokens;
  std::vector<CharSpan> char_spans;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

namespace detail {

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

// The mteval-13a symbol classes: {-~, [-`, space-&, (-+, :-@, and /.
inline bool is_13a_symbol(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return (u >= 0x7B && u <= 0x7E) || (u >= 0x5B && u <= 0x60) ||
         (u >= 0x20 && u <= 0x26) || (u >= 0x28 && u <= 0x2B) ||
         (u >= 0x3A && u <= 0x40) || u == 0x2F;
}

// One byte of working text plus its origin offset in the normalized input.
// Inserted padding carries kInserted so spans survive the rule passes.
struct TaggedChar {
  char c;
  std::size_t src;
};

inline constexpr std::size_t kInserted = std::numeric_limits<std::size_t>::max();

}  // namespace detail

// Scorer-style text normalization: NFC, entity unescape, legacy <skipped>
// markers dropped, all whitespace runs collapsed to single spaces, trimmed.
inline std::string normalize(std::string_view text) {
  std::string s(text);
  detail::replace_all(s, "<skipped>", "");
  if (s.find('&') != std::string::npos) {
    detail::replace_all(s, "&quot;", "\"");
    detail::replace_all(s, "&amp;", "&");
    detail::replace_all(s, "&lt;", "<");
    detail::replace_all(s, "&gt;", ">");
  }
  s = nfc(s);
  std::string out;
  out.reserve(s.size());
  bool in_space = true;  // trims leading whitespace
  for (char c : s) {
    if (detail::is_ascii_space(c)) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(c);
      in_space = false;
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

// mteval-13a-compatible tokenization of already-normalized text.
//
// Applies, in order: (1) pad the 13a symbol classes with spaces; (2) split
// '.' and ',' not flanked by digits; (3) split '-' after a digit; then
// splits on whitespace. Each pass mirrors the non-overlapping left-to-right
// semantics of the reference regex rules, and every emitted token tracks
// its byte span in the input.
inline TokenizedSentence tokenize_13a(std::string_view normalized_text) {
  using detail::TaggedChar;
  using detail::kInserted;

  std::vector<TaggedChar> cur;
  cur.reserve(normalized_text.size() + 2);
  cur.push_back({' ', kInserted});
  for (std::size_t i = 0; i < normalized_text.size(); ++i) {
    cur.push_back({normalized_text[i], i});
  }
  cur.push_back({' ', kInserted});

  std::vector<TaggedChar> next;

  // Pass 1: pad symbol classes.
  next.clear();
  next.reserve(cur.size() * 2);
  for (const TaggedChar& tc : cur) {
    if (detail::is_13a_symbol(tc.c)) {
      next.push_back({' ', kInserted});
      next.push_back(tc);
      next.push_back({' ', kInserted});
    } else {
      next.push_back(tc);
    }
  }
  cur.swap(next);

  // Pass 2: non-digit followed by '.' or ','.
  next.clear();
  next.reserve(cur.size() * 2);
  for (std::size_t i = 0; i < cur.size();) {
    if (i + 1 < cur.size() && !detail::is_digit(cur[i].c) &&
        (cur[i + 1].c == '.' || cur[i + 1].c == ',')) {
      next.push_back(cur[i]);
      next.push_back({' ', kInserted});
      next.push_back(cur[i + 1]);
      next.push_back({' ', kInserted});
      i += 2;
    } else {
      next.push_back(cur[i]);
      ++i;
    }
  }
  cur.swap(next);

  // Pass 3: '.' or ',' followed by a non-digit.
  next.clear();
  next.reserve(cur.size() * 2);
  for (std::size_t i = 0; i < cur.size();) {
    if (i + 1 < cur.size() && (cur[i].c == '.' || cur[i].c == ',') &&
        !detail::is_digit(cur[i + 1].c)) {
      next.push_back({' ', kInserted});
      next.push_back(cur[i]);
      next.push_back({' ', kInserted});
      next.push_back(cur[i + 1]);
      i += 2;
    } else {
      next.push_back(cur[i]);
      ++i;
    }
  }
  cur.swap(next);

  // Pass 4: digit followed by '-'.
  next.clear();
  next.reserve(cur.size() * 2);
  for (std::size_t i = 0; i < cur.size();) {
    if (i + 1 < cur.size() && detail::is_digit(cur[i].c) && cur[i + 1].c == '-') {
      next.push_back(cur[i]);
      next.push_back({' ', kInserted});
      next.push_back(cur[i + 1]);
      next.push_back({' ', kInserted});
      i += 2;
    } else {
      next.push_back(cur[i]);
      ++i;
    }
  }
  cur.swap(next);

  TokenizedSentence out;
  out.raw.assign(normalized_text);
  std::string token;
  std::size_t span_start = 0;
  std::size_t span_end = 0;
  auto flush = [&]() {
    if (!token.empty()) {
      out.tokens.push_back(token);
      out.char_spans.push_back({span_start, span_end});
      token.clear();
    }
  };
  for (const TaggedChar& tc : cur) {
    if (tc.c == ' ') {
      flush();
    } else {
      if (token.empty()) span_start = tc.src;
      span_end = tc.src + 1;
      token.push_back(tc.c);
    }
  }
  flush();
  return out;
}

// Convenience: normalize then tokenize.
inline TokenizedSentence tokenize(std::string_view raw_text) {
  return tokenize_13a(normalize(raw_text));
}

}  // namespace termkit
