#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "termkit/instruction_gen.hpp"
#include "termkit/reward.hpp"
#include "termkit/rng.hpp"
#include "termkit/terminology.hpp"

namespace termkit {

enum class EvalSetting { proper, random, noterm };

inline std::string to_string(EvalSetting s) {
  switch (s) {
    case EvalSetting::proper: return "proper";
    case EvalSetting::random: return "random";
    case EvalSetting::noterm: return "noterm";
  }
  throw std::logic_error("bad setting");
}

inline EvalSetting eval_setting_from_string(std::string_view s) {
  if (s == "proper") return EvalSetting::proper;
  if (s == "random") return EvalSetting::random;
  if (s == "noterm") return EvalSetting::noterm;
  throw std::invalid_argument("unknown setting: " + std::string(s));
}

struct EvalInput {
  std::string prompt;
  TermMappingSet mappings;
};

struct EvalBuildOptions {
  std::string source_lang = "English";
  std::string target_lang = "German";
  // Terminology template used for the proper/random settings.
  InstructionTemplate term_template = default_templates().front();
  std::size_t k_random = 2;
  std::uint64_t seed = 0;
};

// One line of the per-sentence terminology file, parsed with the same
// grammar the reward engine applies to prompts.
inline std::vector<TermMappingSet> read_terms_file(std::istream& in) {
  std::vector<TermMappingSet> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(parse_mappings(line));
  }
  return out;
}

// Builds (prompt, constraint set) rows for one evaluation setting:
//   proper — the provided per-sentence mappings are rendered into the prompt;
//   random — up to k dictionary-covered tokens drawn per sentence, seeded;
//   noterm — plain translation prompts, empty constraint sets.
inline std::vector<EvalInput> build_eval_inputs(
    const std::vector<std::string>& sources,
    const std::optional<std::vector<TermMappingSet>>& provided_terms, EvalSetting setting,
    const Dictionary* dict, const EvalBuildOptions& opts) {
  if (sources.empty()) throw std::invalid_argument("empty test set");
  if (setting == EvalSetting::proper) {
    if (!provided_terms) {
      throw std::invalid_argument("proper setting requires a terminology file");
    }
    if (provided_terms->size() != sources.size()) {
      throw std::invalid_argument("terminology file length does not match source count (" +
                                  std::to_string(provided_terms->size()) + " vs " +
                                  std::to_string(sources.size()) + ")");
    }
  }
  if (setting == EvalSetting::random && dict == nullptr) {
    throw std::invalid_argument("random setting requires a dictionary");
  }

  std::vector<EvalInput> inputs;
  inputs.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    EvalInput input;
    const std::string text = normalize(sources[i]);
    switch (setting) {
      case EvalSetting::proper:
        input.mappings = (*provided_terms)[i];
        break;
      case EvalSetting::random:
        input.mappings =
            draw_random_terms(text, *dict, opts.k_random, mix_seed(opts.seed, i));
        for (auto& m : input.mappings.mappings) m.source_span.reset();
        break;
      case EvalSetting::noterm:
        break;
    }
    const InstructionTemplate& tmpl =
        input.mappings.empty() ? no_terminology_template() : opts.term_template;
    input.prompt =
        render_instruction(tmpl, opts.source_lang, opts.target_lang, input.mappings, text);
    inputs.push_back(std::move(input));
  }
  return inputs;
}

// Client for an external reference-free quality metric. One POST per batch:
//   request  {"pairs":[{"source":...,"hypothesis":...},...]}
//   response {"scores":[0.81,...]}
class QualityClient {
 public:
  explicit QualityClient(const std::string& url, std::size_t batch_size = 64)
      : batch_size_(batch_size == 0 ? 1 : batch_size) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("bad quality url: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    host_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  }

  std::vector<double> score(const std::vector<std::string>& sources,
                            const std::vector<std::string>& hypotheses) const {
    std::vector<double> out(sources.size(), 0.0);
    for (std::size_t start = 0; start < sources.size(); start += batch_size_) {
      const std::size_t end = std::min(sources.size(), start + batch_size_);
      nlohmann::json body;
      body["pairs"] = nlohmann::json::array();
      for (std::size_t i = start; i < end; ++i) {
        body["pairs"].push_back({{"source", sources[i]}, {"hypothesis", hypotheses[i]}});
      }
      httplib::Client client(host_);
      client.set_read_timeout(60, 0);
      auto res = client.Post(path_, body.dump(), "application/json");
      if (!res || res->status != 200) {
        throw std::runtime_error("quality endpoint error" +
                                 (res ? " (status " + std::to_string(res->status) + ")"
                                      : " (no response)"));
      }
      auto scores = nlohmann::json::parse(res->body).at("scores").get<std::vector<double>>();
      if (scores.size() != end - start) {
        throw std::runtime_error("quality endpoint returned wrong score count");
      }
      std::copy(scores.begin(), scores.end(), out.begin() + start);
    }
    return out;
  }

 private:
  std::string host_;
  std::string path_;
  std::size_t batch_size_;
};

struct SentenceDetail {
  std::size_t index = 0;
  TermMappingSet mappings;
  std::vector<bool> matched;  // aligned with mappings
  std::optional<double> quality;
};

struct EvalSegment {
  std::string model;
  std::string language_pair;
  EvalSetting setting = EvalSetting::noterm;
  std::optional<double> quality_score;
  std::optional<double> term_pct;
  std::size_t sentence_count = 0;
  std::vector<SentenceDetail> details;
  std::vector<std::string> warnings;
};

struct EvalReport {
  std::vector<EvalSegment> segments;
};

struct EvaluateOptions {
  // Source sentences, only needed when a quality client is configured.
  std::vector<std::string> sources;
  const QualityClient* quality_client = nullptr;
};

// Scores hypotheses against eval inputs: term accuracy via strict match
// (micro-averaged over non-empty constraint sets, absent when there are no
// terms at all) and mean external quality when a client is configured.
// Quality-client failure downgrades to a warning; the report still carries
// the terminology numbers.
inline EvalSegment evaluate(const std::vector<std::string>& hypotheses,
                            const std::vector<EvalInput>& eval_inputs,
                            const EvaluateOptions& opts = {}) {
  if (hypotheses.size() != eval_inputs.size()) {
    throw std::invalid_argument("hypothesis count (" + std::to_string(hypotheses.size()) +
                                ") does not match input count (" +
                                std::to_string(eval_inputs.size()) + ")");
  }
  EvalSegment segment;
  segment.sentence_count = hypotheses.size();

  long total_terms = 0;
  long matched_terms = 0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    SentenceDetail detail;
    detail.index = i;
    detail.mappings = eval_inputs[i].mappings;
    detail.matched = match_targets(hypotheses[i], eval_inputs[i].mappings);
    total_terms += static_cast<long>(detail.matched.size());
    for (bool b : detail.matched) matched_terms += b ? 1 : 0;
    segment.details.push_back(std::move(detail));
  }
  if (total_terms > 0) {
    segment.term_pct = static_cast<double>(matched_terms) / static_cast<double>(total_terms);
  }

  if (opts.quality_client) {
    try {
      if (opts.sources.size() != hypotheses.size()) {
        throw std::runtime_error("source count does not match hypothesis count");
      }
      auto scores = opts.quality_client->score(opts.sources, hypotheses);
      double sum = 0.0;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        segment.details[i].quality = scores[i];
        sum += scores[i];
      }
      segment.quality_score = sum / static_cast<double>(scores.size());
    } catch (const std::exception& e) {
      segment.quality_score.reset();
      segment.warnings.push_back(std::string("quality client failed: ") + e.what());
    }
  }
  return segment;
}

// --- report serialization ---------------------------------------------------

inline void to_json(nlohmann::json& j, const SentenceDetail& d) {
  j = nlohmann::json{{"index", d.index},
                     {"mappings", d.mappings},
                     {"matched", d.matched}};
  if (d.quality) j["quality"] = *d.quality;
}

inline void from_json(const nlohmann::json& j, SentenceDetail& d) {
  j.at("index").get_to(d.index);
  j.at("mappings").get_to(d.mappings);
  d.matched = j.at("matched").get<std::vector<bool>>();
  if (j.contains("quality")) d.quality = j.at("quality").get<double>();
}

inline void to_json(nlohmann::json& j, const EvalSegment& s) {
  j = nlohmann::json{{"model", s.model},
                     {"language_pair", s.language_pair},
                     {"setting", to_string(s.setting)},
                     {"sentence_count", s.sentence_count},
                     {"details", s.details},
                     {"warnings", s.warnings}};
  if (s.quality_score) j["quality_score"] = *s.quality_score;
  if (s.term_pct) j["term_pct"] = *s.term_pct;
}

inline void from_json(const nlohmann::json& j, EvalSegment& s) {
  j.at("model").get_to(s.model);
  j.at("language_pair").get_to(s.language_pair);
  s.setting = eval_setting_from_string(j.at("setting").get<std::string>());
  j.at("sentence_count").get_to(s.sentence_count);
  s.details = j.at("details").get<std::vector<SentenceDetail>>();
  s.warnings = j.at("warnings").get<std::vector<std::string>>();
  s.quality_score.reset();
  s.term_pct.reset();
  if (j.contains("quality_score")) s.quality_score = j.at("quality_score").get<double>();
  if (j.contains("term_pct")) s.term_pct = j.at("term_pct").get<double>();
}

inline void to_json(nlohmann::json& j, const EvalReport& r) {
  j = nlohmann::json{{"segments", r.segments}};
}

inline void from_json(const nlohmann::json& j, EvalReport& r) {
  r.segments = j.at("segments").get<std::vector<EvalSegment>>();
}

namespace detail {

inline int setting_order(EvalSetting s) {
  switch (s) {
    case EvalSetting::proper: return 0;
    case EvalSetting::random: return 1;
    case EvalSetting::noterm: return 2;
  }
  return 3;
}

inline std::string format_cell(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

}  // namespace detail

enum class ReportFormat { plain_table, machine_readable };

// Renders the report either as an aligned text table (one row per
// model/setting, quality and term% columns per language pair, "-" for
// absent values) or as canonical JSON that parse_report inverts exactly.
// Rows and columns are canonically sorted, so rendering is stable under
// segment reordering.
inline std::string render_report(const EvalReport& report, ReportFormat format) {
  if (format == ReportFormat::machine_readable) {
    EvalReport sorted = report;
    std::sort(sorted.segments.begin(), sorted.segments.end(),
              [](const EvalSegment& a, const EvalSegment& b) {
                if (a.model != b.model) return a.model < b.model;
                if (a.language_pair != b.language_pair) return a.language_pair < b.language_pair;
                return detail::setting_order(a.setting) < detail::setting_order(b.setting);
              });
    return nlohmann::json(sorted).dump(2) + "\n";
  }

  // Collect sorted language pairs and (model, setting) rows.
  std::vector<std::string> pairs;
  for (const auto& s : report.segments) {
    if (std::find(pairs.begin(), pairs.end(), s.language_pair) == pairs.end()) {
      pairs.push_back(s.language_pair);
    }
  }
  std::sort(pairs.begin(), pairs.end());

  struct RowKey {
    std::string model;
    EvalSetting setting;
  };
  std::vector<RowKey> rows;
  std::map<std::pair<std::string, int>, std::map<std::string, const EvalSegment*>> cells;
  for (const auto& s : report.segments) {
    const auto key = std::make_pair(s.model, detail::setting_order(s.setting));
    if (cells.find(key) == cells.end()) rows.push_back({s.model, s.setting});
    cells[key][s.language_pair] = &s;
  }
  std::sort(rows.begin(), rows.end(), [](const RowKey& a, const RowKey& b) {
    if (a.model != b.model) return a.model < b.model;
    return detail::setting_order(a.setting) < detail::setting_order(b.setting);
  });

  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header = {"model", "setting"};
  for (const auto& p : pairs) {
    header.push_back(p + " quality");
    header.push_back(p + " term%");
  }
  table.push_back(std::move(header));
  for (const auto& row : rows) {
    std::vector<std::string> cols = {row.model, to_string(row.setting)};
    const auto& by_pair = cells[{row.model, detail::setting_order(row.setting)}];
    for (const auto& p : pairs) {
      auto it = by_pair.find(p);
      if (it == by_pair.end()) {
        cols.push_back("");
        cols.push_back("");
      } else {
        cols.push_back(detail::format_cell(it->second->quality_score));
        cols.push_back(detail::format_cell(it->second->term_pct));
      }
    }
    table.push_back(std::move(cols));
  }

  std::vector<std::size_t> widths(table.front().size(), 0);
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::string out;
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += "  ";
      out += row[c];
      out.append(widths[c] - row[c].size(), ' ');
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  }
  return out;
}

inline EvalReport parse_report(std::string_view text) {
  return nlohmann::json::parse(text).get<EvalReport>();
}

}  // namespace termkit
