// termkit — terminology-constrained translation toolkit CLI.
//
// Subcommands cover the full data path: filter → sample → annotate →
// gen-instructions for training data, reward / grpo-sim for reward scoring
// and the desk-scale optimizer, eval-build / eval-score / report for the
// three-setting evaluation, and serve for the batch reward service.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "termkit/eval.hpp"
#include "termkit/grpo_sim.hpp"
#include "termkit/instruction_gen.hpp"
#include "termkit/manifest.hpp"
#include "termkit/pipeline.hpp"
#include "termkit/reward_service.hpp"
#include "termkit/version.hpp"

namespace {

using nlohmann::json;

// --- small I/O helpers -------------------------------------------------------

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* value = std::getenv(name);
  return value ? value : fallback;
}

// Tracks inputs/outputs of one run and writes "<first output>.manifest.json".
class ManifestBuilder {
 public:
  ManifestBuilder(std::string command, const std::vector<std::string>& argv) {
    manifest_.command = std::move(command);
    manifest_.argv = argv;
    manifest_.started_at = termkit::iso8601_utc_now();
  }

  void seed(std::uint64_t s) { manifest_.seed = s; }
  void input(const std::string& path) { manifest_.inputs.push_back(termkit::digest_file(path)); }
  void output(const std::string& path) { outputs_.push_back(path); }

  void finish() {
    if (outputs_.empty()) return;
    for (const auto& path : outputs_) {
      manifest_.outputs.push_back(termkit::digest_file(path));
    }
    manifest_.finished_at = termkit::iso8601_utc_now();
    termkit::write_manifest(manifest_, outputs_.front() + ".manifest.json");
  }

 private:
  termkit::RunManifest manifest_;
  std::vector<std::string> outputs_;
};

std::uint64_t require_or_generate_seed(std::optional<std::uint64_t> seed) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t generated =
      (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
  std::cerr << "seed: " << generated << " (generated; pass --seed to reproduce)\n";
  return generated;
}

termkit::Dictionary load_dictionary_file(const std::string& path, const std::string& src_lang,
                                         const std::string& tgt_lang) {
  auto in = open_in(path);
  auto result = termkit::load_dictionary(in, src_lang, tgt_lang);
  if (result.skipped_too_long > 0) {
    std::cerr << "dictionary: skipped " << result.skipped_too_long
              << " entries longer than " << termkit::kMaxTermTokens << " tokens\n";
  }
  return result.dictionary;
}

std::vector<termkit::InstructionTemplate> load_templates(const std::string& path) {
  if (path.empty()) return termkit::default_templates();
  auto in = open_in(path);
  json j;
  in >> j;
  std::vector<termkit::InstructionTemplate> templates;
  for (const auto& item : j) {
    termkit::InstructionTemplate t;
    t.id = item.at("id").get<int>();
    t.pattern = item.at("pattern").get<std::string>();
    termkit::validate_template(t, /*requires_mapping_list=*/true);
    templates.push_back(std::move(t));
  }
  if (templates.empty()) throw std::runtime_error("template file " + path + " is empty");
  return templates;
}

// Record produced by `annotate` and consumed by `gen-instructions`.
struct AnnotatedPair {
  std::string source;
  std::string target;
  termkit::TermMappingSet mappings;
  std::string annotated_source;
};

void to_json(json& j, const AnnotatedPair& p) {
  j = json{{"source", p.source},
           {"target", p.target},
           {"mappings", p.mappings},
           {"annotated_source", p.annotated_source}};
}

void from_json(const json& j, AnnotatedPair& p) {
  j.at("source").get_to(p.source);
  j.at("target").get_to(p.target);
  j.at("mappings").get_to(p.mappings);
  j.at("annotated_source").get_to(p.annotated_source);
}

std::vector<AnnotatedPair> read_annotated(const std::string& path) {
  auto in = open_in(path);
  std::vector<AnnotatedPair> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line).get<AnnotatedPair>());
    } catch (const json::exception& e) {
      throw std::runtime_error(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

// --- subcommand bodies -------------------------------------------------------

struct FilterArgs {
  std::string in, out, scorer = "lexical", endpoint;
  double threshold = 0.9;
  std::size_t batch_size = 64;
  std::size_t workers = 4;
};

void run_filter(const FilterArgs& args, ManifestBuilder& manifest) {
  auto in = open_in(args.in);
  auto pairs = termkit::read_pairs(in);
  manifest.input(args.in);

  std::unique_ptr<termkit::SimilarityScorer> scorer;
  if (args.scorer == "lexical") {
    scorer = std::make_unique<termkit::LexicalDiceScorer>();
  } else {
    const std::string endpoint = args.endpoint.empty()
                                     ? env_or("TERMKIT_SIMILARITY_ENDPOINT", "")
                                     : args.endpoint;
    if (endpoint.empty()) {
      throw std::runtime_error(
          "http scorer needs --endpoint or TERMKIT_SIMILARITY_ENDPOINT");
    }
    scorer = std::make_unique<termkit::HttpSimilarityScorer>(endpoint, args.batch_size);
  }

  auto result = termkit::filter_pairs(pairs, *scorer, args.threshold, args.workers);
  auto out = open_out(args.out);
  termkit::write_pairs(result.kept, out);
  out.close();
  manifest.output(args.out);
  std::cerr << "filter: kept " << result.kept.size() << ", discarded "
            << result.discarded_below_threshold << " below " << args.threshold
            << ", scorer errors " << result.scorer_errors << "\n";
}

struct SampleArgs {
  std::string in, sft_out, grpo_out;
  std::size_t n_sft = 10000;
  std::size_t n_grpo = 1000;
  std::optional<std::uint64_t> seed;
};

void run_sample(const SampleArgs& args, ManifestBuilder& manifest) {
  const std::uint64_t seed = require_or_generate_seed(args.seed);
  manifest.seed(seed);
  auto in = open_in(args.in);
  auto pairs = termkit::read_pairs(in);
  manifest.input(args.in);
  auto split = termkit::sample_split(pairs, args.n_sft, args.n_grpo, seed);
  {
    auto out = open_out(args.sft_out);
    termkit::write_pairs(split.sft, out);
  }
  {
    auto out = open_out(args.grpo_out);
    termkit::write_pairs(split.grpo, out);
  }
  manifest.output(args.sft_out);
  manifest.output(args.grpo_out);
  std::cerr << "sample: " << split.sft.size() << " SFT + " << split.grpo.size()
            << " GRPO pairs\n";
}

struct AnnotateArgs {
  std::string dict, in, out, mode = "append";
  std::string src_lang = "English", tgt_lang = "German";
  bool case_sensitive = false;
};

void run_annotate(const AnnotateArgs& args, ManifestBuilder& manifest) {
  auto dict = load_dictionary_file(args.dict, args.src_lang, args.tgt_lang);
  manifest.input(args.dict);
  auto in = open_in(args.in);
  auto pairs = termkit::read_pairs(in);
  manifest.input(args.in);

  const auto mode =
      args.mode == "append" ? termkit::AnnotateMode::append : termkit::AnnotateMode::none;
  auto out = open_out(args.out);
  std::size_t with_terms = 0;
  for (const auto& pair : pairs) {
    AnnotatedPair record;
    record.source = pair.source;
    record.target = pair.target;
    record.mappings =
        termkit::match_terms(pair.source, pair.target, dict, !args.case_sensitive);
    record.annotated_source = termkit::inline_annotate(
        termkit::normalize(pair.source), record.mappings, mode);
    if (!record.mappings.empty()) ++with_terms;
    out << json(record).dump() << '\n';
  }
  out.close();
  manifest.output(args.out);
  std::cerr << "annotate: " << pairs.size() << " pairs, " << with_terms
            << " with at least one term\n";
}

struct GenInstructionsArgs {
  std::string in, out, chat_format = "format_b", templates_path;
  std::string src_lang = "English", tgt_lang = "German";
  std::optional<std::uint64_t> seed;
};

void run_gen_instructions(const GenInstructionsArgs& args, ManifestBuilder& manifest) {
  const std::uint64_t seed = require_or_generate_seed(args.seed);
  manifest.seed(seed);
  auto records = read_annotated(args.in);
  manifest.input(args.in);
  if (!args.templates_path.empty()) manifest.input(args.templates_path);
  auto templates = load_templates(args.templates_path);

  termkit::SampleOptions opts;
  opts.source_lang = args.src_lang;
  opts.target_lang = args.tgt_lang;
  opts.chat_format = termkit::chat_format_from_string(args.chat_format);
  // The annotate step already applied inline annotation to annotated_source.
  opts.inline_mode = termkit::AnnotateMode::none;

  std::vector<termkit::InstructionSample> samples;
  samples.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    samples.push_back(termkit::build_sample(r.annotated_source, r.target, r.mappings,
                                            templates, opts, termkit::mix_seed(seed, i)));
  }
  auto out = open_out(args.out);
  termkit::emit_samples(samples, out);
  out.close();
  manifest.output(args.out);
  std::cerr << "gen-instructions: " << samples.size() << " samples\n";
}

struct RewardArgs {
  std::string in, out;
  double w_bleu = 0.5, w_term = 0.5;
  std::optional<int> group_size;
};

void run_reward(const RewardArgs& args, ManifestBuilder& manifest) {
  auto in = open_in(args.in);
  manifest.input(args.in);
  termkit::RewardRequest request;
  request.weights = termkit::RewardWeights{args.w_bleu, args.w_term};
  request.group_size = args.group_size;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      request.items.push_back(json::parse(line).get<termkit::RewardItem>());
    } catch (const json::exception& e) {
      throw std::runtime_error(args.in + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  const auto response = termkit::score_batch(request);
  auto out = open_out(args.out);
  out << json(response).dump(2) << '\n';
  out.close();
  manifest.output(args.out);
  std::cerr << "reward: scored " << response.results.size() << " items\n";
}

struct GrpoSimArgs {
  std::string pools, trace_out, policy_out;
  int steps = 500;
  int group_size = 16;
  double learning_rate = 0.5;
  double w_bleu = 0.5, w_term = 0.5;
  double l2_to_init = 0.0;
  std::optional<std::uint64_t> seed;
};

void run_grpo_sim(const GrpoSimArgs& args, ManifestBuilder& manifest) {
  const std::uint64_t seed = require_or_generate_seed(args.seed);
  manifest.seed(seed);
  auto in = open_in(args.pools);
  auto pools = termkit::read_pools(in);
  manifest.input(args.pools);
  if (pools.empty()) throw std::runtime_error("no pools in " + args.pools);

  termkit::GrpoOptions opts;
  opts.group_size = args.group_size;
  opts.learning_rate = args.learning_rate;
  opts.weights = termkit::RewardWeights{args.w_bleu, args.w_term};
  opts.l2_to_init = args.l2_to_init;

  auto [policy, trace] = termkit::train(termkit::init_policy(pools), pools, args.steps,
                                        opts, seed);
  {
    auto out = open_out(args.trace_out);
    termkit::write_trace_tsv(trace, out);
  }
  manifest.output(args.trace_out);
  if (!args.policy_out.empty()) {
    json policy_json = {{"temperature", policy.temperature}, {"logits", policy.logits}};
    json argmax = json::array();
    for (std::size_t p = 0; p < pools.size(); ++p) {
      const auto probs = policy.probabilities(p);
      std::size_t best = 0;
      for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) best = i;
      }
      argmax.push_back(best);
    }
    policy_json["argmax"] = argmax;
    auto out = open_out(args.policy_out);
    out << policy_json.dump(2) << '\n';
    out.close();
    manifest.output(args.policy_out);
  }
  std::cerr << "grpo-sim: " << args.steps << " steps over " << pools.size()
            << " pools; final mean reward " << trace.steps.back().mean_reward << "\n";
}

struct EvalBuildArgs {
  std::string src, terms, dict, setting = "proper", out, templates_path;
  std::string src_lang = "English", tgt_lang = "German";
  int template_id = 1;
  std::size_t k_random = 2;
  std::optional<std::uint64_t> seed;
};

void run_eval_build(const EvalBuildArgs& args, ManifestBuilder& manifest) {
  const auto setting = termkit::eval_setting_from_string(args.setting);
  auto sources = read_lines(args.src);
  manifest.input(args.src);

  std::optional<std::vector<termkit::TermMappingSet>> terms;
  if (!args.terms.empty()) {
    auto in = open_in(args.terms);
    terms = termkit::read_terms_file(in);
    manifest.input(args.terms);
  } else if (setting == termkit::EvalSetting::proper) {
    throw std::runtime_error("proper setting requires --terms");
  }

  termkit::Dictionary dict;
  const termkit::Dictionary* dict_ptr = nullptr;
  if (!args.dict.empty()) {
    dict = load_dictionary_file(args.dict, args.src_lang, args.tgt_lang);
    manifest.input(args.dict);
    dict_ptr = &dict;
  }

  termkit::EvalBuildOptions opts;
  opts.source_lang = args.src_lang;
  opts.target_lang = args.tgt_lang;
  opts.k_random = args.k_random;
  if (setting == termkit::EvalSetting::random) {
    opts.seed = require_or_generate_seed(args.seed);
    manifest.seed(opts.seed);
  } else {
    opts.seed = args.seed.value_or(0);
  }
  auto templates = load_templates(args.templates_path);
  bool found = false;
  for (const auto& t : templates) {
    if (t.id == args.template_id) {
      opts.term_template = t;
      found = true;
      break;
    }
  }
  if (!found) {
    throw std::runtime_error("template id " + std::to_string(args.template_id) +
                             " not in the template set");
  }

  auto inputs = termkit::build_eval_inputs(sources, terms, setting, dict_ptr, opts);
  auto out = open_out(args.out);
  for (const auto& input : inputs) {
    out << json{{"prompt", input.prompt}, {"mappings", input.mappings}}.dump() << '\n';
  }
  out.close();
  manifest.output(args.out);
  std::cerr << "eval-build: " << inputs.size() << " prompts (" << args.setting << ")\n";
}

struct EvalScoreArgs {
  std::string inputs, hyp, out, src;
  std::string model = "system", lang_pair = "en-xx", setting = "proper";
  std::string quality_endpoint;
};

void run_eval_score(const EvalScoreArgs& args, ManifestBuilder& manifest) {
  std::vector<termkit::EvalInput> inputs;
  {
    auto in = open_in(args.inputs);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        auto j = json::parse(line);
        termkit::EvalInput input;
        j.at("prompt").get_to(input.prompt);
        j.at("mappings").get_to(input.mappings);
        inputs.push_back(std::move(input));
      } catch (const json::exception& e) {
        throw std::runtime_error(args.inputs + " line " + std::to_string(line_no) + ": " +
                                 e.what());
      }
    }
  }
  manifest.input(args.inputs);
  auto hypotheses = read_lines(args.hyp);
  manifest.input(args.hyp);

  termkit::EvaluateOptions opts;
  const std::string endpoint = args.quality_endpoint.empty()
                                   ? env_or("TERMKIT_QUALITY_ENDPOINT", "")
                                   : args.quality_endpoint;
  std::optional<termkit::QualityClient> client;
  if (!endpoint.empty()) {
    if (args.src.empty()) {
      throw std::runtime_error("--src is required when a quality endpoint is configured");
    }
    opts.sources = read_lines(args.src);
    manifest.input(args.src);
    client.emplace(endpoint);
    opts.quality_client = &*client;
  }

  auto segment = termkit::evaluate(hypotheses, inputs, opts);
  segment.model = args.model;
  segment.language_pair = args.lang_pair;
  segment.setting = termkit::eval_setting_from_string(args.setting);
  for (const auto& warning : segment.warnings) std::cerr << "warning: " << warning << "\n";

  termkit::EvalReport report;
  report.segments.push_back(std::move(segment));
  auto out = open_out(args.out);
  out << termkit::render_report(report, termkit::ReportFormat::machine_readable);
  out.close();
  manifest.output(args.out);
  const auto& s = report.segments.front();
  std::cerr << "eval-score: " << s.sentence_count << " sentences";
  if (s.term_pct) std::cerr << ", term% " << *s.term_pct;
  if (s.quality_score) std::cerr << ", quality " << *s.quality_score;
  std::cerr << "\n";
}

struct ReportArgs {
  std::vector<std::string> in;
  std::string format = "plain";
  std::string out;
};

void run_report(const ReportArgs& args, ManifestBuilder& manifest) {
  termkit::EvalReport merged;
  for (const auto& path : args.in) {
    auto in = open_in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto report = termkit::parse_report(buffer.str());
    for (auto& segment : report.segments) merged.segments.push_back(std::move(segment));
    manifest.input(path);
  }
  const auto format = args.format == "json" ? termkit::ReportFormat::machine_readable
                                            : termkit::ReportFormat::plain_table;
  const std::string rendered = termkit::render_report(merged, format);
  if (args.out.empty()) {
    std::cout << rendered;
  } else {
    auto out = open_out(args.out);
    out << rendered;
    out.close();
    manifest.output(args.out);
  }
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8400;
  double w_bleu = 0.5, w_term = 0.5;
  std::size_t max_batch = 4096;
};

termkit::RewardServer* g_server = nullptr;

void run_serve(const ServeArgs& args) {
  termkit::ServiceConfig config;
  config.default_weights = termkit::RewardWeights{args.w_bleu, args.w_term};
  config.max_batch_size = args.max_batch;
  termkit::RewardServer server(config);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cerr << "termkit serve: listening on " << args.host << ":" << args.port << "\n";
  if (!server.listen(args.host, args.port)) {
    throw std::runtime_error("cannot bind " + args.host + ":" + std::to_string(args.port));
  }
  std::cerr << "termkit serve: stopped\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"terminology-constrained translation toolkit"};
  app.name("termkit");
  app.set_version_flag("--version", std::string("termkit ") + termkit::kVersion);
  app.require_subcommand(1);

  std::vector<std::string> raw_args(argv, argv + argc);

  FilterArgs filter_args;
  auto* filter = app.add_subcommand("filter", "similarity-filter a parallel corpus");
  filter->add_option("--in", filter_args.in, "input pairs TSV (source<TAB>target)")
      ->required()
      ->check(CLI::ExistingFile);
  filter->add_option("--out", filter_args.out, "output TSV of retained pairs with scores")
      ->required();
  filter->add_option("--threshold", filter_args.threshold,
                     "retain pairs scoring >= this value")
      ->capture_default_str();
  filter->add_option("--scorer", filter_args.scorer, "similarity scorer: lexical or http")
      ->check(CLI::IsMember({"lexical", "http"}))
      ->capture_default_str();
  filter->add_option("--endpoint", filter_args.endpoint,
                     "similarity endpoint URL (or TERMKIT_SIMILARITY_ENDPOINT)");
  filter->add_option("--batch-size", filter_args.batch_size, "http scorer batch size")
      ->capture_default_str();
  filter->add_option("--workers", filter_args.workers, "concurrent scoring workers")
      ->capture_default_str();

  SampleArgs sample_args;
  auto* sample = app.add_subcommand("sample", "draw disjoint SFT/GRPO splits");
  sample->add_option("--in", sample_args.in, "filtered pairs TSV")
      ->required()
      ->check(CLI::ExistingFile);
  sample->add_option("--sft", sample_args.sft_out, "output TSV for the SFT split")->required();
  sample->add_option("--grpo", sample_args.grpo_out, "output TSV for the GRPO split")
      ->required();
  sample->add_option("--n-sft", sample_args.n_sft, "SFT sample size")->capture_default_str();
  sample->add_option("--n-grpo", sample_args.n_grpo, "GRPO sample size")
      ->capture_default_str();
  sample->add_option("--seed", sample_args.seed, "sampling seed (generated if omitted)");

  AnnotateArgs annotate_args;
  auto* annotate = app.add_subcommand("annotate", "match pairs against a term dictionary");
  annotate->add_option("--dict", annotate_args.dict, "bilingual dictionary TSV")
      ->required()
      ->check(CLI::ExistingFile);
  annotate->add_option("--in", annotate_args.in, "pairs TSV")
      ->required()
      ->check(CLI::ExistingFile);
  annotate->add_option("--out", annotate_args.out, "output JSONL of annotated records")
      ->required();
  annotate->add_option("--mode", annotate_args.mode, "inline annotation: append or none")
      ->check(CLI::IsMember({"append", "none"}))
      ->capture_default_str();
  annotate->add_flag("--case-sensitive", annotate_args.case_sensitive,
                     "match source terms case-sensitively");
  annotate->add_option("--src-lang", annotate_args.src_lang, "source language label")
      ->capture_default_str();
  annotate->add_option("--tgt-lang", annotate_args.tgt_lang, "target language label")
      ->capture_default_str();

  GenInstructionsArgs gen_args;
  auto* gen = app.add_subcommand("gen-instructions",
                                 "render annotated pairs as chat training samples");
  gen->add_option("--in", gen_args.in, "annotated JSONL from `annotate`")
      ->required()
      ->check(CLI::ExistingFile);
  gen->add_option("--out", gen_args.out, "output JSONL of instruction samples")->required();
  gen->add_option("--seed", gen_args.seed, "template-selection seed (generated if omitted)");
  gen->add_option("--chat-format", gen_args.chat_format,
                  "format_a (thinking block) or format_b (plain)")
      ->check(CLI::IsMember({"format_a", "format_b"}))
      ->capture_default_str();
  gen->add_option("--templates", gen_args.templates_path,
                  "JSON file with instruction templates (default: built-in set)");
  gen->add_option("--src-lang", gen_args.src_lang, "source language label")
      ->capture_default_str();
  gen->add_option("--tgt-lang", gen_args.tgt_lang, "target language label")
      ->capture_default_str();

  RewardArgs reward_args;
  auto* reward = app.add_subcommand("reward", "score hypothesis items with GRPO rewards");
  reward->add_option("--in", reward_args.in, "JSONL of reward items")
      ->required()
      ->check(CLI::ExistingFile);
  reward->add_option("--out", reward_args.out, "output JSON with results and advantages")
      ->required();
  reward->add_option("--w-bleu", reward_args.w_bleu, "BLEU reward weight")
      ->capture_default_str();
  reward->add_option("--w-term", reward_args.w_term, "terminology reward weight")
      ->capture_default_str();
  reward->add_option("--group-size", reward_args.group_size,
                     "normalize consecutive blocks of this size");

  GrpoSimArgs grpo_args;
  auto* grpo = app.add_subcommand("grpo-sim", "desk-scale GRPO over candidate pools");
  grpo->add_option("--pools", grpo_args.pools, "JSONL of candidate pools")
      ->required()
      ->check(CLI::ExistingFile);
  grpo->add_option("--trace", grpo_args.trace_out, "output TSV training trace")->required();
  grpo->add_option("--policy-out", grpo_args.policy_out, "output JSON of final logits");
  grpo->add_option("--steps", grpo_args.steps, "training steps")->capture_default_str();
  grpo->add_option("--group-size", grpo_args.group_size, "completions per sample")
      ->capture_default_str();
  grpo->add_option("--lr", grpo_args.learning_rate, "learning rate")->capture_default_str();
  grpo->add_option("--w-bleu", grpo_args.w_bleu, "BLEU reward weight")->capture_default_str();
  grpo->add_option("--w-term", grpo_args.w_term, "terminology reward weight")
      ->capture_default_str();
  grpo->add_option("--l2-to-init", grpo_args.l2_to_init,
                   "optional pull of logits back to initialization")
      ->capture_default_str();
  grpo->add_option("--seed", grpo_args.seed, "training seed (generated if omitted)");

  EvalBuildArgs eval_build_args;
  auto* eval_build = app.add_subcommand("eval-build", "build evaluation prompts");
  eval_build->add_option("--src", eval_build_args.src, "source sentences, one per line")
      ->required()
      ->check(CLI::ExistingFile);
  eval_build->add_option("--setting", eval_build_args.setting, "proper, random, or noterm")
      ->check(CLI::IsMember({"proper", "random", "noterm"}))
      ->capture_default_str();
  eval_build->add_option("--terms", eval_build_args.terms,
                         "per-sentence terminology file (proper setting)")
      ->check(CLI::ExistingFile);
  eval_build->add_option("--dict", eval_build_args.dict, "dictionary TSV (random setting)")
      ->check(CLI::ExistingFile);
  eval_build->add_option("--k", eval_build_args.k_random, "random terms drawn per sentence")
      ->capture_default_str();
  eval_build->add_option("--seed", eval_build_args.seed,
                         "random-terms seed (generated if omitted)");
  eval_build->add_option("--template-id", eval_build_args.template_id,
                         "terminology template to render with")
      ->capture_default_str();
  eval_build->add_option("--templates", eval_build_args.templates_path,
                         "JSON file with instruction templates");
  eval_build->add_option("--src-lang", eval_build_args.src_lang, "source language label")
      ->capture_default_str();
  eval_build->add_option("--tgt-lang", eval_build_args.tgt_lang, "target language label")
      ->capture_default_str();
  eval_build->add_option("--out", eval_build_args.out, "output JSONL of (prompt, mappings)")
      ->required();

  EvalScoreArgs eval_score_args;
  auto* eval_score = app.add_subcommand("eval-score", "score hypotheses against eval inputs");
  eval_score->add_option("--inputs", eval_score_args.inputs, "JSONL from eval-build")
      ->required()
      ->check(CLI::ExistingFile);
  eval_score->add_option("--hyp", eval_score_args.hyp,
                         "hypotheses, one per line, aligned with inputs")
      ->required()
      ->check(CLI::ExistingFile);
  eval_score->add_option("--out", eval_score_args.out, "output report JSON")->required();
  eval_score->add_option("--model", eval_score_args.model, "model label for the report")
      ->capture_default_str();
  eval_score->add_option("--lang-pair", eval_score_args.lang_pair, "language pair label")
      ->capture_default_str();
  eval_score->add_option("--setting", eval_score_args.setting, "setting label")
      ->check(CLI::IsMember({"proper", "random", "noterm"}))
      ->capture_default_str();
  eval_score->add_option("--quality-endpoint", eval_score_args.quality_endpoint,
                         "quality metric endpoint (or TERMKIT_QUALITY_ENDPOINT)");
  eval_score->add_option("--src", eval_score_args.src,
                         "source sentences (required with a quality endpoint)")
      ->check(CLI::ExistingFile);

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "render evaluation reports");
  report->add_option("--in", report_args.in, "report JSON files to merge")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("--format", report_args.format, "plain or json")
      ->check(CLI::IsMember({"plain", "json"}))
      ->capture_default_str();
  report->add_option("--out", report_args.out, "write here instead of stdout");

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "run the batch reward-scoring service");
  serve->add_option("--host", serve_args.host, "bind address")->capture_default_str();
  serve->add_option("--port", serve_args.port, "bind port")->capture_default_str();
  serve->add_option("--w-bleu", serve_args.w_bleu, "default BLEU weight")
      ->capture_default_str();
  serve->add_option("--w-term", serve_args.w_term, "default terminology weight")
      ->capture_default_str();
  serve->add_option("--max-batch", serve_args.max_batch, "maximum items per request")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*filter) {
      ManifestBuilder manifest("filter", raw_args);
      run_filter(filter_args, manifest);
      manifest.finish();
    } else if (*sample) {
      ManifestBuilder manifest("sample", raw_args);
      run_sample(sample_args, manifest);
      manifest.finish();
    } else if (*annotate) {
      ManifestBuilder manifest("annotate", raw_args);
      run_annotate(annotate_args, manifest);
      manifest.finish();
    } else if (*gen) {
      ManifestBuilder manifest("gen-instructions", raw_args);
      run_gen_instructions(gen_args, manifest);
      manifest.finish();
    } else if (*reward) {
      ManifestBuilder manifest("reward", raw_args);
      run_reward(reward_args, manifest);
      manifest.finish();
    } else if (*grpo) {
      ManifestBuilder manifest("grpo-sim", raw_args);
      run_grpo_sim(grpo_args, manifest);
      manifest.finish();
    } else if (*eval_build) {
      ManifestBuilder manifest("eval-build", raw_args);
      run_eval_build(eval_build_args, manifest);
      manifest.finish();
    } else if (*eval_score) {
      ManifestBuilder manifest("eval-score", raw_args);
      run_eval_score(eval_score_args, manifest);
      manifest.finish();
    } else if (*report) {
      ManifestBuilder manifest("report", raw_args);
      run_report(report_args, manifest);
      manifest.finish();
    } else if (*serve) {
      run_serve(serve_args);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
