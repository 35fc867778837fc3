#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "termkit/instruction_gen.hpp"
#include "termkit/reward.hpp"
#include "termkit/rng.hpp"
#include "test_util.hpp"

using termkit::combined_reward;
using termkit::group_advantages;
using termkit::parse_mappings;
using termkit::r_term;
using termkit::RewardWeights;
using termkit::TermMapping;
using termkit::TermMappingSet;

namespace {

// The user prompt of the training-sample figure, with its printed line breaks.
const std::string kFigurePrompt =
    "Generate a Spanish translation that accurately \n"
    "reflects the terminology specified in \n"
    "clause → cláusula.\n"
    "\n"
    "Text to translate: To this end, it must comply \n"
    "with the WTO requirements and, in particular, \n"
    "with the GATT enabling clause cláusula of 1979.";

const std::string kFigureResponse =
    "A tal fin, debe cumplir con los requisitos de la OMC y, en especial, con la "
    "cláusula de habilitación del GATT de 1979.";

TermMappingSet make_set(const std::vector<std::pair<std::string, std::string>>& pairs) {
  TermMappingSet set;
  for (const auto& [s, t] : pairs) set.add(TermMapping{s, t, std::nullopt});
  return set;
}

}  // namespace

TEST_CASE("parse_mappings extracts the figure prompt constraint") {
  auto set = parse_mappings(kFigurePrompt);
  REQUIRE(set.size() == 1);
  CHECK(set.mappings[0].source_term == "clause");
  CHECK(set.mappings[0].target_term == "cláusula");
}

TEST_CASE("parse_mappings without arrows is empty") {
  CHECK(parse_mappings("Translate this text into German.\n\nText: hello").empty());
  CHECK(parse_mappings("").empty());
}

TEST_CASE("parse_mappings splits items on comma-space") {
  auto set = parse_mappings("Use these mappings: a → x, b c → y z\n\nText: t");
  REQUIRE(set.size() == 2);
  CHECK(set.mappings[0].source_term == "a");
  CHECK(set.mappings[0].target_term == "x");
  CHECK(set.mappings[1].source_term == "b c");
  CHECK(set.mappings[1].target_term == "y z");
}

TEST_CASE("parse_mappings accepts the ASCII arrow and mixed spellings") {
  auto set = parse_mappings("terminology: a -> x, b → y");
  REQUIRE(set.size() == 2);
  CHECK(set.pairs() ==
        std::vector<std::pair<std::string, std::string>>{{"a", "x"}, {"b", "y"}});
}

TEST_CASE("parse_mappings deduplicates preserving order") {
  auto set = parse_mappings("list: b → y, a → x, b → y");
  REQUIRE(set.size() == 2);
  CHECK(set.mappings[0].source_term == "b");
  CHECK(set.mappings[1].source_term == "a");
}

TEST_CASE("parse_mappings strips one trailing sentence period") {
  auto set = parse_mappings("respecting the glossary: clause → cláusula.");
  REQUIRE(set.size() == 1);
  CHECK(set.mappings[0].target_term == "cláusula");
}

TEST_CASE("r_term on the figure sample") {
  auto set = make_set({{"clause", "cláusula"}});
  CHECK(r_term(kFigureResponse, set) == 1.0);
}

TEST_CASE("r_term default and fractional cases") {
  CHECK(r_term("anything at all", {}) == 1.0);
  auto two = make_set({{"a", "uno"}, {"b", "dos"}});
  CHECK(r_term("contains uno only", two) == 0.5);
  CHECK(r_term("contains uno and dos", two) == 1.0);
  CHECK(r_term("neither term", two) == 0.0);
}

TEST_CASE("r_term is monotone under appending target terms") {
  termkit::Rng rng(88);
  for (int i = 0; i < 200; ++i) {
    auto set = make_set({{"s1", "alpha" + std::to_string(rng.next_below(10))},
                         {"s2", "beta" + std::to_string(rng.next_below(10))},
                         {"s3", "gamma" + std::to_string(rng.next_below(10))}});
    std::string hyp = "base sentence";
    double prev = r_term(hyp, set);
    for (const auto& m : set) {
      hyp += " " + m.target_term;
      double cur = r_term(hyp, set);
      CHECK(cur >= prev);
      prev = cur;
    }
    CHECK(prev == 1.0);
  }
}

TEST_CASE("r_term equals flat enumeration on randomized cases") {
  termkit::Rng rng(1000);
  const std::vector<std::string> vocab = {"uno",  "dos",  "tres", "cuatro",
                                          "cinco", "seis", "siete", "ocho"};
  for (int i = 0; i < 1000; ++i) {
    TermMappingSet set;
    std::vector<std::string> targets;
    const std::size_t n = 1 + rng.next_below(5);
    for (std::size_t t = 0; t < n; ++t) {
      std::string target = vocab[rng.next_below(vocab.size())] + "_" + std::to_string(t);
      if (set.add({"s" + std::to_string(t), target, std::nullopt})) targets.push_back(target);
    }
    std::string hyp = "x";
    for (const auto& target : targets) {
      if (rng.next_below(2) == 0) hyp += " " + target;
    }
    const double expected = oracle::flat_term_accuracy({{hyp, targets}});
    CHECK(r_term(hyp, set) == Catch::Approx(expected));
  }
}

TEST_CASE("combined_reward on identical hypothesis with all terms") {
  auto set = make_set({{"clause", "cláusula"}});
  auto breakdown = combined_reward(kFigureResponse, kFigureResponse, set);
  CHECK(breakdown.r_bleu == Catch::Approx(1.0));
  CHECK(breakdown.r_term == 1.0);
  CHECK(breakdown.combined == Catch::Approx(1.0));
  REQUIRE(breakdown.matched_terms.size() == 1);
  CHECK(breakdown.matched_terms[0]);
}

TEST_CASE("combined_reward arithmetic") {
  auto set = make_set({{"the", "the"}});
  auto breakdown = combined_reward("the cat sat on the mat", "the cat sat on a mat", set);
  CHECK(breakdown.r_bleu == Catch::Approx(0.5373).margin(5e-5));
  CHECK(breakdown.r_term == 1.0);
  CHECK(breakdown.combined == Catch::Approx((0.53728 + 1.0) / 2.0).margin(5e-5));

  auto bleu_only = combined_reward("the cat sat on the mat", "the cat sat on a mat", set,
                                   RewardWeights{1.0, 0.0});
  CHECK(bleu_only.combined == bleu_only.r_bleu);

  auto term_only = combined_reward("no overlap here", "the cat sat on a mat", set,
                                   RewardWeights{0.0, 1.0});
  CHECK(term_only.combined == term_only.r_term);
}

TEST_CASE("combined_reward stays in [0,1] and satisfies its identity") {
  termkit::Rng rng(314);
  const std::vector<std::string> words = {"a", "b", "c", "d", "e", "uno", "dos"};
  for (int i = 0; i < 200; ++i) {
    auto sentence = [&](std::size_t len) {
      std::string s;
      for (std::size_t w = 0; w < len; ++w) {
        if (w) s += ' ';
        s += words[rng.next_below(words.size())];
      }
      return s;
    };
    auto set = make_set({{"s", words[rng.next_below(words.size())]}});
    RewardWeights weights{0.1 + rng.next_double(), 0.1 + rng.next_double()};
    auto breakdown = combined_reward(sentence(1 + rng.next_below(8)),
                                     sentence(1 + rng.next_below(8)), set, weights);
    CHECK(breakdown.combined >= 0.0);
    CHECK(breakdown.combined <= 1.0);
    const double expected =
        (weights.w_bleu * breakdown.r_bleu + weights.w_term * breakdown.r_term) /
        (weights.w_bleu + weights.w_term);
    CHECK(breakdown.combined == Catch::Approx(expected).margin(1e-12));
    long matched = std::count(breakdown.matched_terms.begin(),
                              breakdown.matched_terms.end(), true);
    CHECK(breakdown.r_term ==
          Catch::Approx(static_cast<double>(matched) / set.size()));
  }
}

TEST_CASE("invalid weights are rejected") {
  auto set = make_set({{"a", "x"}});
  CHECK_THROWS_AS(combined_reward("h", "r", set, RewardWeights{0.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(combined_reward("h", "r", set, RewardWeights{-1.0, 2.0}),
                  std::invalid_argument);
}

TEST_CASE("reward and generator agree on built samples") {
  std::istringstream dict_in(
      "clause\tcláusula\nrequirements\trequisitos\nGATT\tGATT\n");
  auto dict = termkit::load_dictionary(dict_in, "en", "es").dictionary;
  const std::string source =
      "To this end, it must comply with the WTO requirements and, in particular, "
      "with the GATT enabling clause of 1979.";
  const std::string reference =
      "A tal fin, debe cumplir con los requisitos de la OMC y, en especial, con la "
      "cláusula de habilitación del GATT de 1979.";
  auto mappings = termkit::match_terms(source, reference, dict);
  REQUIRE(mappings.size() == 3);

  termkit::SampleOptions opts;
  opts.source_lang = "English";
  opts.target_lang = "Spanish";
  for (auto format : {termkit::ChatFormat::format_a, termkit::ChatFormat::format_b}) {
    opts.chat_format = format;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto sample = termkit::build_sample(source, reference, mappings,
                                          termkit::default_templates(), opts, seed);
      auto parsed = parse_mappings(sample.messages[0].content);
      CHECK(parsed == sample.mappings);
      CHECK(r_term(reference, parsed) == 1.0);
    }
  }
}

TEST_CASE("group_advantages basics") {
  auto uniform = group_advantages(std::vector<double>{1.0, 1.0, 1.0, 1.0});
  CHECK(uniform.stddev == 0.0);
  for (double a : uniform.advantages) CHECK(a == 0.0);

  auto pair = group_advantages(std::vector<double>{0.0, 1.0});
  CHECK(pair.mean == Catch::Approx(0.5));
  CHECK(pair.stddev == Catch::Approx(0.5));
  CHECK(pair.advantages[0] == Catch::Approx(-1.0).margin(1e-7));
  CHECK(pair.advantages[1] == Catch::Approx(1.0).margin(1e-7));

  CHECK_THROWS_WITH(group_advantages(std::vector<double>{1.0}), "group too small");
  CHECK_THROWS_WITH(group_advantages(std::vector<double>{}), "group too small");
}

TEST_CASE("group_advantages properties: permutation, shift, scale") {
  termkit::Rng rng(606);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t g = 2 + rng.next_below(15);
    std::vector<double> rewards(g);
    for (auto& r : rewards) r = rng.next_double();

    auto base = group_advantages(rewards);
    double mean_adv = 0.0;
    for (double a : base.advantages) mean_adv += a;
    mean_adv /= static_cast<double>(g);
    CHECK(std::abs(mean_adv) <= 1e-9);

    // Permutation equivariance: reversing inputs reverses advantages.
    std::vector<double> reversed(rewards.rbegin(), rewards.rend());
    auto rev = group_advantages(reversed);
    for (std::size_t i = 0; i < g; ++i) {
      CHECK(rev.advantages[i] == Catch::Approx(base.advantages[g - 1 - i]).margin(1e-12));
    }

    // Shift invariance.
    std::vector<double> shifted = rewards;
    for (auto& r : shifted) r += 3.25;
    auto shift = group_advantages(shifted);
    for (std::size_t i = 0; i < g; ++i) {
      CHECK(shift.advantages[i] == Catch::Approx(base.advantages[i]).margin(1e-9));
    }

    // Positive scaling leaves advantages unchanged up to epsilon effects.
    std::vector<double> scaled = rewards;
    for (auto& r : scaled) r *= 4.0;
    auto scale = group_advantages(scaled);
    for (std::size_t i = 0; i < g; ++i) {
      CHECK(scale.advantages[i] == Catch::Approx(base.advantages[i]).margin(1e-5));
    }
  }
}
