#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "termkit/bleu.hpp"
#include "termkit/rng.hpp"
#include "termkit/text_norm.hpp"
#include "test_util.hpp"

using termkit::r_bleu;
using termkit::sentence_bleu;
using termkit::tokenize;
using termkit::tokenize_13a;

namespace {

// Random hypothesis/reference pairs sharing a vocabulary so n-gram overlap
// occurs at every order.
std::vector<std::pair<std::string, std::string>> synthetic_pairs(std::size_t n,
                                                                 std::uint64_t seed) {
  static const std::vector<std::string> words = {
      "the", "a",  "cat",  "dog",  "sat",   "ran",  "on", "under",
      "mat", "rug", "big",  "small", "house", "tree", "and", "today"};
  termkit::Rng rng(seed);
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto make = [&](std::size_t len) {
      std::string s;
      for (std::size_t w = 0; w < len; ++w) {
        if (w) s += ' ';
        s += words[rng.next_below(words.size())];
      }
      return s;
    };
    const std::size_t ref_len = 1 + rng.next_below(15);
    // Mix of related and unrelated lengths, including short hypotheses.
    const std::size_t hyp_len = 1 + rng.next_below(15);
    out.emplace_back(make(hyp_len), make(ref_len));
  }
  return out;
}

}  // namespace

TEST_CASE("identical sentences score 100") {
  auto ts = tokenize("the cat sat on the mat");
  auto score = sentence_bleu(ts, ts);
  CHECK(score.score == Catch::Approx(100.0).margin(1e-9));
  CHECK(score.brevity_penalty == 1.0);
  for (double p : score.precisions) CHECK(p == 1.0);
}

TEST_CASE("hand-derived example: clipped counts and score") {
  auto hyp = tokenize("the cat sat on the mat");
  auto ref = tokenize("the cat sat on a mat");
  auto score = sentence_bleu(hyp, ref);
  CHECK(score.precisions[0] == Catch::Approx(5.0 / 6.0));
  CHECK(score.precisions[1] == Catch::Approx(3.0 / 5.0));
  CHECK(score.precisions[2] == Catch::Approx(2.0 / 4.0));
  CHECK(score.precisions[3] == Catch::Approx(1.0 / 3.0));
  CHECK(score.brevity_penalty == 1.0);
  CHECK(score.score == Catch::Approx(53.73).margin(0.005));
  // Cross-check the exact value against the brute-force oracle.
  auto brute = oracle::brute_sentence_bleu(hyp.tokens, ref.tokens);
  CHECK(score.score == Catch::Approx(brute.score).margin(1e-9));
}

TEST_CASE("disjoint sentences: all orders smoothed") {
  auto hyp = tokenize("alpha beta gamma delta epsilon zeta");
  auto ref = tokenize("one two three four five six");
  auto score = sentence_bleu(hyp, ref);
  auto brute = oracle::brute_sentence_bleu(hyp.tokens, ref.tokens);
  CHECK(score.score == Catch::Approx(brute.score).margin(1e-9));
  CHECK(score.score < 5.0);
  CHECK(score.score > 0.0);
}

TEST_CASE("empty reference is rejected") {
  auto hyp = tokenize("a b c");
  auto empty = tokenize("");
  CHECK_THROWS_WITH(sentence_bleu(hyp, empty), "empty reference");
}

TEST_CASE("empty hypothesis degenerate case") {
  auto hyp = tokenize("");
  auto ref = tokenize("a b c");
  auto score = sentence_bleu(hyp, ref);
  CHECK(score.score == 0.0);
  CHECK(score.brevity_penalty == std::numeric_limits<double>::min());
  for (double p : score.precisions) CHECK(p == 0.0);
}

TEST_CASE("short hypotheses use the effective order") {
  auto hyp = tokenize("the cat");
  auto ref = tokenize("the cat sat on the mat");
  auto score = sentence_bleu(hyp, ref);
  // Orders 1..2 only: p1 = 2/2, p2 = 1/1; BP = exp(1 - 6/2).
  const double expected = std::exp(1.0 - 3.0) * 100.0;
  CHECK(score.score == Catch::Approx(expected).margin(1e-9));
  CHECK(score.precisions[2] == 0.0);
  CHECK(score.precisions[3] == 0.0);
}

TEST_CASE("brevity penalty is 1 when hypothesis is not shorter") {
  auto ref = tokenize("a b c");
  CHECK(sentence_bleu(tokenize("a b c d e"), ref).brevity_penalty == 1.0);
  CHECK(sentence_bleu(tokenize("a b c"), ref).brevity_penalty == 1.0);
}

TEST_CASE("monotone brevity: shortening below ref_len never raises BP") {
  auto ref = tokenize("w1 w2 w3 w4 w5 w6 w7 w8");
  double prev_bp = 1.0;
  for (std::size_t len = 7; len >= 1; --len) {
    std::string hyp;
    for (std::size_t i = 0; i < len; ++i) {
      if (i) hyp += ' ';
      hyp += "w" + std::to_string(i + 1);
    }
    double bp = sentence_bleu(tokenize(hyp), ref).brevity_penalty;
    CHECK(bp <= prev_bp);
    prev_bp = bp;
  }
}

TEST_CASE("score equals bp times geometric mean of smoothed precisions") {
  for (const auto& [h, r] : synthetic_pairs(200, 123)) {
    auto score = sentence_bleu(tokenize(h), tokenize(r));
    const std::size_t eff = std::min<std::size_t>(4, score.hyp_len);
    if (eff == 0) continue;
    double log_sum = 0.0;
    for (std::size_t n = 0; n < eff; ++n) log_sum += std::log(score.precisions[n]);
    const double recomputed =
        score.brevity_penalty * std::exp(log_sum / static_cast<double>(eff)) * 100.0;
    CHECK(score.score == Catch::Approx(recomputed).margin(1e-9));
    CHECK(score.score >= 0.0);
    CHECK(score.score <= 100.0 + 1e-9);
  }
}

TEST_CASE("oracle equivalence on a randomized corpus") {
  for (const auto& [h, r] : synthetic_pairs(300, 20240501)) {
    auto hyp = tokenize(h);
    auto ref = tokenize(r);
    auto score = sentence_bleu(hyp, ref);
    auto brute = oracle::brute_sentence_bleu(hyp.tokens, ref.tokens);
    INFO("hyp: " << h << "\nref: " << r);
    CHECK(score.score == Catch::Approx(brute.score).margin(1e-4));
  }
}

TEST_CASE("r_bleu normalizes to [0, 1]") {
  CHECK(r_bleu("same sentence here", "same sentence here") == Catch::Approx(1.0));
  const double example =
      r_bleu("the cat sat on the mat", "the cat sat on a mat");
  CHECK(example == Catch::Approx(0.5373).margin(5e-5));

  // Fully disjoint sentences of length >= 6: smoothing floor, oracle-derived.
  const double floor_value =
      r_bleu("alpha beta gamma delta epsilon zeta", "uno dos tres cuatro cinco seis");
  auto brute = oracle::brute_sentence_bleu(
      tokenize("alpha beta gamma delta epsilon zeta").tokens,
      tokenize("uno dos tres cuatro cinco seis").tokens);
  CHECK(floor_value == Catch::Approx(brute.score / 100.0).margin(1e-9));
  CHECK(floor_value > 0.0);
  CHECK(floor_value < 0.05);

  for (const auto& [h, r] : synthetic_pairs(100, 77)) {
    const double v = r_bleu(h, r);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("r_bleu applies 13a tokenization through normalize") {
  // Same token stream after entity unescape and NFC must be a perfect match.
  CHECK(r_bleu("a&quot;b", "a\"b") == Catch::Approx(1.0));
  CHECK(r_bleu("cláusula final", "cláusula final") == Catch::Approx(1.0));
}
