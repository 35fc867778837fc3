#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "oracles.hpp"
#include "termkit/rng.hpp"
#include "termkit/text_norm.hpp"
#include "test_util.hpp"

using termkit::normalize;
using termkit::TokenizedSentence;
using termkit::tokenize;
using termkit::tokenize_13a;

namespace {

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

// Seeded multilingual sentence generator used for property tests.
std::vector<std::string> synthetic_corpus(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::string> words = {
      "the",      "cat",      "clause",   "cláusula",
      "Straße", "über", "mañana", "español",
      "язык", "банк",
      "договор", "GATT",
      "WTO",      "1979",     "1,000",    "pre-1990",
      "2.5",      "habilitación", "requirements", "won't",
      "U.S.",     "re-import", "Bäckerei", "café"};
  static const std::vector<std::string> punct = {".", ",", "!", "?", ";", ":", "\"", "(", ")", "-"};
  termkit::Rng rng(seed);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string line;
    const std::size_t len = 3 + rng.next_below(12);
    for (std::size_t w = 0; w < len; ++w) {
      if (w) line += ' ';
      line += words[rng.next_below(words.size())];
      if (rng.next_below(6) == 0) line += punct[rng.next_below(punct.size())];
    }
    line += punct[rng.next_below(2)];
    out.push_back(line);
  }
  return out;
}

}  // namespace

TEST_CASE("normalize unescapes entities") {
  CHECK(normalize("a&quot;b") == "a\"b");
  CHECK(normalize("x&amp;y") == "x&y");
  CHECK(normalize("&lt;tag&gt;") == "<tag>");
}

TEST_CASE("normalize replaces newlines and collapses whitespace") {
  CHECK(normalize("x\ny") == "x y");
  CHECK(normalize("a  b ") == "a b");
  CHECK(normalize("  a\t\tb\r\nc  ") == "a b c");
}

TEST_CASE("normalize strips skipped markers and applies NFC") {
  CHECK(normalize("a <skipped> b") == "a b");
  CHECK(normalize("cláusula") == "cláusula");
}

TEST_CASE("tokenize_13a matches the spec examples") {
  CHECK(tokenize_13a("hello world").tokens == std::vector<std::string>{"hello", "world"});
  CHECK(tokenize_13a("A 1,000 test.").tokens ==
        std::vector<std::string>{"A", "1,000", "test", "."});
  CHECK(tokenize_13a("pre-1990").tokens == std::vector<std::string>{"pre-1990"});
}

TEST_CASE("tokenize_13a agrees with the independent regex oracle") {
  // The three named examples first.
  for (const std::string s : {"hello world", "A 1,000 test.", "pre-1990"}) {
    CHECK(tokenize_13a(s).tokens == oracle::tokenize_13a_regex(s));
  }
  // Then a randomized corpus.
  for (const auto& line : synthetic_corpus(300, 20250810)) {
    std::string norm = normalize(line);
    INFO("line: " << norm);
    CHECK(tokenize_13a(norm).tokens == oracle::tokenize_13a_regex(norm));
  }
}

TEST_CASE("tokenize_13a handles punctuation splitting") {
  CHECK(tokenize_13a("it, too.").tokens == std::vector<std::string>{"it", ",", "too", "."});
  CHECK(tokenize_13a("3.5 or 3. 5").tokens ==
        std::vector<std::string>{"3.5", "or", "3", ".", "5"});
  CHECK(tokenize_13a("1990-2000").tokens == std::vector<std::string>{"1990", "-", "2000"});
  CHECK(tokenize_13a("(a)").tokens == std::vector<std::string>{"(", "a", ")"});
  CHECK(tokenize_13a("").tokens.empty());
}

TEST_CASE("tokenization is idempotent") {
  for (const auto& line : synthetic_corpus(1000, 42)) {
    auto first = tokenize(line);
    auto second = tokenize_13a(join(first.tokens));
    INFO("line: " << line);
    CHECK(second.tokens == first.tokens);
  }
}

TEST_CASE("char spans are strictly increasing and lossless") {
  for (const auto& line : synthetic_corpus(500, 7)) {
    auto ts = tokenize(line);
    REQUIRE(ts.tokens.size() == ts.char_spans.size());
    std::size_t prev_end = 0;
    std::string collected;
    for (std::size_t i = 0; i < ts.tokens.size(); ++i) {
      const auto& span = ts.char_spans[i];
      CHECK(span.start >= prev_end);
      CHECK(span.end > span.start);
      CHECK(ts.raw.substr(span.start, span.end - span.start) == ts.tokens[i]);
      prev_end = span.end;
      collected += ts.tokens[i];
    }
    std::string non_space;
    for (char c : ts.raw) {
      if (c != ' ') non_space += c;
    }
    CHECK(collected == non_space);
  }
}

TEST_CASE("tokens contain no whitespace and are non-empty") {
  for (const auto& line : synthetic_corpus(200, 99)) {
    for (const auto& tok : tokenize(line).tokens) {
      CHECK_FALSE(tok.empty());
      CHECK(tok.find(' ') == std::string::npos);
    }
  }
}
