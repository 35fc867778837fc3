#include <catch2/catch_amalgamated.hpp>

#include <httplib.h>

#include <atomic>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "termkit/eval.hpp"
#include "test_util.hpp"

using termkit::build_eval_inputs;
using termkit::EvalBuildOptions;
using termkit::EvalInput;
using termkit::EvalReport;
using termkit::EvalSegment;
using termkit::EvalSetting;
using termkit::evaluate;
using termkit::parse_mappings;
using termkit::parse_report;
using termkit::QualityClient;
using termkit::read_terms_file;
using termkit::render_report;
using termkit::ReportFormat;
using termkit::TermMapping;
using termkit::TermMappingSet;

namespace {

std::vector<std::string> test_sources() {
  return {
      "The clause of the treaty applies.",
      "Banks must follow the requirements.",
      "A plain sentence with no terms.",
  };
}

std::vector<TermMappingSet> test_terms() {
  TermMappingSet first;
  first.add(TermMapping{"clause", "cláusula", std::nullopt});
  first.add(TermMapping{"treaty", "tratado", std::nullopt});
  TermMappingSet second;
  second.add(TermMapping{"requirements", "requisitos", std::nullopt});
  return {first, second, TermMappingSet{}};
}

termkit::Dictionary test_dict() {
  std::istringstream in(
      "clause\tcláusula\ntreaty\ttratado\nrequirements\trequisitos\nbanks\tbancos\n");
  return termkit::load_dictionary(in, "en", "es").dictionary;
}

}  // namespace

TEST_CASE("noterm inputs carry empty mapping sets and no arrows") {
  auto inputs = build_eval_inputs(test_sources(), std::nullopt, EvalSetting::noterm,
                                  nullptr, EvalBuildOptions{});
  REQUIRE(inputs.size() == 3);
  for (const auto& input : inputs) {
    CHECK(input.mappings.empty());
    CHECK(input.prompt.find("→") == std::string::npos);
  }
}

TEST_CASE("proper inputs render the provided mappings") {
  auto inputs = build_eval_inputs(test_sources(), test_terms(), EvalSetting::proper,
                                  nullptr, EvalBuildOptions{});
  REQUIRE(inputs.size() == 3);
  CHECK(inputs[0].prompt.find("clause → cláusula") != std::string::npos);
  CHECK(parse_mappings(inputs[0].prompt) == test_terms()[0]);
  CHECK(parse_mappings(inputs[1].prompt) == test_terms()[1]);
  // The no-term sentence falls back to a plain translation prompt.
  CHECK(inputs[2].mappings.empty());
  CHECK(parse_mappings(inputs[2].prompt).empty());
}

TEST_CASE("proper setting requires a matching terminology file") {
  CHECK_THROWS_WITH(build_eval_inputs(test_sources(), std::nullopt, EvalSetting::proper,
                                      nullptr, EvalBuildOptions{}),
                    Catch::Matchers::ContainsSubstring("terminology file"));
  auto short_terms = std::vector<TermMappingSet>{TermMappingSet{}};
  CHECK_THROWS_WITH(build_eval_inputs(test_sources(), short_terms, EvalSetting::proper,
                                      nullptr, EvalBuildOptions{}),
                    Catch::Matchers::ContainsSubstring("does not match"));
}

TEST_CASE("random inputs are reproducible for a fixed seed") {
  auto dict = test_dict();
  EvalBuildOptions opts;
  opts.k_random = 2;
  opts.seed = 99;
  auto a = build_eval_inputs(test_sources(), std::nullopt, EvalSetting::random, &dict, opts);
  auto b = build_eval_inputs(test_sources(), std::nullopt, EvalSetting::random, &dict, opts);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].prompt == b[i].prompt);
    CHECK(a[i].mappings == b[i].mappings);
  }
  // Drawn terms come from the dictionary and round-trip through the prompt.
  for (const auto& input : a) {
    CHECK(parse_mappings(input.prompt) == input.mappings);
  }
  opts.seed = 100;
  auto c = build_eval_inputs(test_sources(), std::nullopt, EvalSetting::random, &dict, opts);
  bool any_difference = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    any_difference |= !(a[i].mappings == c[i].mappings);
  }
  // Different seeds may coincide on tiny candidate sets, but not everywhere.
  CHECK(any_difference);
}

TEST_CASE("empty test set is rejected") {
  CHECK_THROWS_AS(build_eval_inputs({}, std::nullopt, EvalSetting::noterm, nullptr,
                                    EvalBuildOptions{}),
                  std::invalid_argument);
}

TEST_CASE("terms file parses one mapping list per line") {
  std::istringstream in(
      "clause → cláusula, treaty → tratado\n"
      "requirements -> requisitos\n"
      "\n");
  auto terms = read_terms_file(in);
  REQUIRE(terms.size() == 3);
  CHECK(terms[0].size() == 2);
  CHECK(terms[1].size() == 1);
  CHECK(terms[2].empty());
}

TEST_CASE("evaluate computes micro term accuracy") {
  auto inputs = build_eval_inputs(test_sources(), test_terms(), EvalSetting::proper,
                                  nullptr, EvalBuildOptions{});
  // First hypothesis hits both terms, second hits none: 2 of 3 total terms.
  std::vector<std::string> hyps = {
      "La cláusula del tratado se aplica.",
      "Los bancos deben cumplir las reglas.",
      "Una frase sin términos.",
  };
  auto segment = evaluate(hyps, inputs);
  CHECK(segment.sentence_count == 3);
  REQUIRE(segment.term_pct.has_value());
  CHECK(*segment.term_pct == Catch::Approx(2.0 / 3.0));
  CHECK_FALSE(segment.quality_score.has_value());
  REQUIRE(segment.details.size() == 3);
  CHECK(segment.details[0].matched == std::vector<bool>{true, true});
  CHECK(segment.details[1].matched == std::vector<bool>{false});
  CHECK(segment.details[2].matched.empty());
}

TEST_CASE("noterm evaluation has no term percentage") {
  auto inputs = build_eval_inputs(test_sources(), std::nullopt, EvalSetting::noterm,
                                  nullptr, EvalBuildOptions{});
  std::vector<std::string> hyps = {"a", "b", "c"};
  auto segment = evaluate(hyps, inputs);
  CHECK_FALSE(segment.term_pct.has_value());
  CHECK(segment.sentence_count == 3);
}

TEST_CASE("evaluate rejects length mismatches") {
  auto inputs = build_eval_inputs(test_sources(), std::nullopt, EvalSetting::noterm,
                                  nullptr, EvalBuildOptions{});
  CHECK_THROWS_WITH(evaluate({"only one"}, inputs),
                    Catch::Matchers::ContainsSubstring("does not match"));
}

TEST_CASE("term accuracy equals flat enumeration on a synthetic set") {
  termkit::Rng rng(11);
  std::vector<EvalInput> inputs;
  std::vector<std::string> hyps;
  std::vector<std::pair<std::string, std::vector<std::string>>> oracle_records;
  for (int i = 0; i < 10; ++i) {
    EvalInput input;
    std::vector<std::string> targets;
    const std::size_t n = 1 + rng.next_below(3);
    for (std::size_t t = 0; t < n; ++t) {
      std::string target = "tgt" + std::to_string(i) + "_" + std::to_string(t);
      input.mappings.add(TermMapping{"src", target, std::nullopt});
      targets.push_back(target);
    }
    std::string hyp = "hyp" + std::to_string(i);
    for (const auto& target : targets) {
      if (rng.next_below(2) == 0) hyp += " " + target;
    }
    inputs.push_back(input);
    hyps.push_back(hyp);
    oracle_records.emplace_back(hyp, targets);
  }
  auto segment = evaluate(hyps, inputs);
  REQUIRE(segment.term_pct.has_value());
  CHECK(*segment.term_pct == Catch::Approx(oracle::flat_term_accuracy(oracle_records)));
}

TEST_CASE("quality client failure downgrades to a warning") {
  auto inputs = build_eval_inputs(test_sources(), std::nullopt, EvalSetting::noterm,
                                  nullptr, EvalBuildOptions{});
  QualityClient client("http://127.0.0.1:1/unreachable");
  termkit::EvaluateOptions opts;
  opts.sources = test_sources();
  opts.quality_client = &client;
  auto segment = evaluate({"a", "b", "c"}, inputs, opts);
  CHECK_FALSE(segment.quality_score.has_value());
  REQUIRE_FALSE(segment.warnings.empty());
  CHECK(segment.warnings[0].find("quality client failed") != std::string::npos);
}

TEST_CASE("quality client aggregates endpoint scores") {
  httplib::Server server;
  server.Post("/v1/quality", [&](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    nlohmann::json scores = nlohmann::json::array();
    for (const auto& item : body.at("pairs")) {
      scores.push_back(item.at("hypothesis").get<std::string>().size() % 2 == 0 ? 0.8 : 0.6);
    }
    res.set_content(nlohmann::json{{"scores", scores}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto inputs = build_eval_inputs(test_sources(), std::nullopt, EvalSetting::noterm,
                                  nullptr, EvalBuildOptions{});
  QualityClient client("http://127.0.0.1:" + std::to_string(port) + "/v1/quality", 2);
  termkit::EvaluateOptions opts;
  opts.sources = test_sources();
  opts.quality_client = &client;
  auto segment = evaluate({"ab", "abc", "abcd"}, inputs, opts);
  REQUIRE(segment.quality_score.has_value());
  CHECK(*segment.quality_score == Catch::Approx((0.8 + 0.6 + 0.8) / 3.0));
  CHECK(segment.warnings.empty());

  server.stop();
  server_thread.join();
}

TEST_CASE("plain report renders a dash for absent term percentage") {
  EvalReport report;
  for (auto setting : {EvalSetting::proper, EvalSetting::random, EvalSetting::noterm}) {
    EvalSegment s;
    s.model = "toy";
    s.language_pair = "en-de";
    s.setting = setting;
    s.sentence_count = 2;
    s.quality_score = 0.8;
    if (setting != EvalSetting::noterm) s.term_pct = 0.5;
    report.segments.push_back(s);
  }
  auto table = render_report(report, ReportFormat::plain_table);
  std::istringstream lines(table);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  REQUIRE(rows.size() == 4);  // header + three settings
  CHECK(rows[1].find("proper") != std::string::npos);
  CHECK(rows[1].find("0.5000") != std::string::npos);
  CHECK(rows[3].find("noterm") != std::string::npos);
  CHECK(rows[3].find("-") != std::string::npos);
  CHECK(rows[3].find("0.5000") == std::string::npos);
}

TEST_CASE("machine-readable report round-trips") {
  auto inputs = build_eval_inputs(test_sources(), test_terms(), EvalSetting::proper,
                                  nullptr, EvalBuildOptions{});
  auto segment = evaluate({"cláusula tratado", "requisitos", "x"}, inputs);
  segment.model = "toy";
  segment.language_pair = "en-es";
  segment.setting = EvalSetting::proper;
  EvalReport report;
  report.segments.push_back(segment);

  auto text = render_report(report, ReportFormat::machine_readable);
  auto recovered = parse_report(text);
  REQUIRE(recovered.segments.size() == 1);
  const auto& r = recovered.segments[0];
  CHECK(r.model == "toy");
  CHECK(r.language_pair == "en-es");
  CHECK(r.setting == EvalSetting::proper);
  CHECK(r.term_pct == segment.term_pct);
  CHECK(r.sentence_count == segment.sentence_count);
  REQUIRE(r.details.size() == segment.details.size());
  for (std::size_t i = 0; i < r.details.size(); ++i) {
    CHECK(r.details[i].matched == segment.details[i].matched);
    CHECK(r.details[i].mappings == segment.details[i].mappings);
  }
  // Rendering the recovered report reproduces the same bytes.
  CHECK(render_report(recovered, ReportFormat::machine_readable) == text);
}

TEST_CASE("report rendering is stable under segment reordering") {
  EvalReport report;
  for (const char* pair : {"en-de", "en-es"}) {
    for (auto setting : {EvalSetting::proper, EvalSetting::noterm}) {
      EvalSegment s;
      s.model = "m";
      s.language_pair = pair;
      s.setting = setting;
      s.sentence_count = 1;
      if (setting == EvalSetting::proper) s.term_pct = 0.25;
      report.segments.push_back(s);
    }
  }
  auto rendered = render_report(report, ReportFormat::plain_table);
  EvalReport reversed;
  reversed.segments.assign(report.segments.rbegin(), report.segments.rend());
  CHECK(render_report(reversed, ReportFormat::plain_table) == rendered);
  CHECK(render_report(reversed, ReportFormat::machine_readable) ==
        render_report(report, ReportFormat::machine_readable));
}
