#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "termkit/rng.hpp"
#include "termkit/terminology.hpp"
#include "termkit/text_norm.hpp"

namespace termkit {

struct InstructionTemplate {
  int id = 0;
  std::string pattern;
};

// Reserved id for the built-in plain-translation pattern used when a sample
// carries no terminology constraints.
inline constexpr int kNoTermTemplateId = 0;

inline const InstructionTemplate& no_terminology_template() {
  static const InstructionTemplate t{
      kNoTermTemplateId,
      "Translate the following text from [src_lang] to [tgt_lang].\n\n"
      "Text to translate: [text]"};
  return t;
}

// The ten stock terminology instruction templates. Each one renders the
// mapping list after a colon and terminates it with a line break, which is
// what makes parse_mappings an exact inverse. Editable: CLI users can load
// a replacement set from JSON.
inline std::vector<InstructionTemplate> default_templates() {
  return {
      {1,
       "Translate the following text from [src_lang] to [tgt_lang] while adhering to the "
       "specified terminology: [mapping_list]\n\nText to translate: [text]"},
      {2,
       "Generate a [tgt_lang] translation that accurately reflects the terminology "
       "specified in the following mappings: [mapping_list]\n\nText to translate: [text]"},
      {3,
       "Translate this [src_lang] text into [tgt_lang]. Use these term translations: "
       "[mapping_list]\n\n[text]"},
      {4,
       "Produce a [tgt_lang] version of the text below. The following terminology must "
       "appear in your translation: [mapping_list]\n\nText: [text]"},
      {5,
       "You are given a passage in [src_lang] and a terminology list. Render the passage "
       "in [tgt_lang], applying every mapping.\nTerminology: [mapping_list]\nPassage: [text]"},
      {6,
       "Translate into [tgt_lang], making sure each listed term is translated as "
       "indicated.\nTerms: [mapping_list]\nInput: [text]"},
      {7,
       "Please translate the text from [src_lang] to [tgt_lang]. Respect the glossary "
       "entries: [mapping_list]\n\nText: [text]"},
      {8,
       "Convert the following [src_lang] text to [tgt_lang]. Required term translations: "
       "[mapping_list]\n\n[text]"},
      {9,
       "Translate the text below into [tgt_lang]. The terminology constraints are: "
       "[mapping_list]\n\n[text]"},
      {10,
       "As a professional translator, translate this text into [tgt_lang] and use the "
       "given terminology.\nTerminology: [mapping_list]\nText: [text]"},
  };
}

namespace detail {

inline std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

inline void replace_placeholder(std::string& s, std::string_view placeholder,
                                std::string_view value) {
  auto pos = s.find(placeholder);
  if (pos != std::string::npos) s.replace(pos, placeholder.size(), value);
}

}  // namespace detail

// A usable template contains [text] exactly once and each other placeholder
// at most once; terminology templates must carry [mapping_list].
inline void validate_template(const InstructionTemplate& t, bool requires_mapping_list) {
  if (detail::count_occurrences(t.pattern, "[text]") != 1) {
    throw std::invalid_argument("template " + std::to_string(t.id) +
                                ": placeholder [text] must occur exactly once");
  }
  for (const char* ph : {"[mapping_list]", "[src_lang]", "[tgt_lang]"}) {
    if (detail::count_occurrences(t.pattern, ph) > 1) {
      throw std::invalid_argument("template " + std::to_string(t.id) + ": placeholder " +
                                  std::string(ph) + " must occur at most once");
    }
  }
  if (requires_mapping_list &&
      detail::count_occurrences(t.pattern, "[mapping_list]") != 1) {
    throw std::invalid_argument("template " + std::to_string(t.id) +
                                ": placeholder [mapping_list] must occur exactly once");
  }
}

inline const std::string kMappingArrow = " → ";  // " → "

// "source term → target term" items joined by ", ".
inline std::string render_mapping_list(const TermMappingSet& mappings) {
  std::string out;
  for (std::size_t i = 0; i < mappings.size(); ++i) {
    if (i) out += ", ";
    out += mappings.mappings[i].source_term;
    out += kMappingArrow;
    out += mappings.mappings[i].target_term;
  }
  return out;
}

// Substitutes the placeholders of a template. Raises when the template lacks
// a placeholder the inputs require, naming the missing placeholder.
inline std::string render_instruction(const InstructionTemplate& tmpl,
                                      std::string_view source_lang,
                                      std::string_view target_lang,
                                      const TermMappingSet& mappings,
                                      std::string_view text) {
  if (tmpl.pattern.find("[text]") == std::string::npos) {
    throw std::invalid_argument("template " + std::to_string(tmpl.id) +
                                ": missing placeholder [text]");
  }
  if (!mappings.empty() && tmpl.pattern.find("[mapping_list]") == std::string::npos) {
    throw std::invalid_argument("template " + std::to_string(tmpl.id) +
                                ": missing placeholder [mapping_list]");
  }
  std::string out = tmpl.pattern;
  detail::replace_placeholder(out, "[src_lang]", source_lang);
  detail::replace_placeholder(out, "[tgt_lang]", target_lang);
  detail::replace_placeholder(out, "[mapping_list]", render_mapping_list(mappings));
  detail::replace_placeholder(out, "[text]", text);
  return out;
}

enum class ChatFormat { format_a, format_b };

inline std::string to_string(ChatFormat f) {
  return f == ChatFormat::format_a ? "format_a" : "format_b";
}

inline ChatFormat chat_format_from_string(std::string_view s) {
  if (s == "format_a") return ChatFormat::format_a;
  if (s == "format_b") return ChatFormat::format_b;
  throw std::invalid_argument("unknown chat format: " + std::string(s));
}

// format_a prefixes the assistant turn with an empty thinking block whose
// delimiters and blank content never carry loss.
inline const std::string kThinkingPrefix = "<think>\n\n</think>\n\n";

struct Message {
  std::string role;
  std::string content;

  bool operator==(const Message&) const = default;
};

// Byte range of one message's content that contributes to the training loss.
struct LossSpan {
  std::size_t message_index = 0;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const LossSpan&) const = default;
};

struct InstructionSample {
  std::vector<Message> messages;
  TermMappingSet mappings;
  std::string source_lang;
  std::string target_lang;
  int template_id = 0;
  ChatFormat chat_format = ChatFormat::format_b;
  std::vector<LossSpan> loss_spans;

  bool operator==(const InstructionSample& o) const {
    return messages == o.messages && mappings == o.mappings &&
           source_lang == o.source_lang && target_lang == o.target_lang &&
           template_id == o.template_id && chat_format == o.chat_format &&
           loss_spans == o.loss_spans;
  }

  const Message& assistant() const {
    for (const auto& m : messages) {
      if (m.role == "assistant") return m;
    }
    throw std::logic_error("sample has no assistant message");
  }
};

struct SampleOptions {
  std::string source_lang = "English";
  std::string target_lang = "German";
  ChatFormat chat_format = ChatFormat::format_b;
  AnnotateMode inline_mode = AnnotateMode::append;
};

// Builds one chat-format training record: the user turn is a randomly
// selected instruction rendered over the (optionally inline-annotated)
// source, the assistant turn is the reference with loss spans covering the
// translation text only. Mapping spans are consumed by annotation and not
// retained on the sample.
inline InstructionSample build_sample(std::string_view source, std::string_view reference,
                                      const TermMappingSet& mappings,
                                      const std::vector<InstructionTemplate>& templates,
                                      const SampleOptions& opts, std::uint64_t seed) {
  const std::string norm_source = normalize(source);
  const std::string norm_reference = normalize(reference);
  if (norm_source.empty()) throw std::invalid_argument("empty source");
  if (norm_reference.empty()) throw std::invalid_argument("empty reference");

  InstructionSample sample;
  sample.source_lang = opts.source_lang;
  sample.target_lang = opts.target_lang;
  sample.chat_format = opts.chat_format;

  const InstructionTemplate* tmpl = nullptr;
  if (mappings.empty()) {
    tmpl = &no_terminology_template();
  } else {
    if (templates.empty()) throw std::invalid_argument("no templates available");
    Rng rng(seed);
    tmpl = &templates[rng.next_below(templates.size())];
  }
  sample.template_id = tmpl->id;

  const std::string text = inline_annotate(norm_source, mappings, opts.inline_mode);
  std::string user = render_instruction(*tmpl, opts.source_lang, opts.target_lang,
                                        mappings, text);
  sample.messages.push_back({"user", std::move(user)});

  std::string assistant;
  std::size_t loss_begin = 0;
  if (opts.chat_format == ChatFormat::format_a) {
    assistant = kThinkingPrefix + norm_reference;
    loss_begin = kThinkingPrefix.size();
  } else {
    assistant = norm_reference;
  }
  const std::size_t assistant_index = sample.messages.size();
  sample.loss_spans.push_back({assistant_index, loss_begin, assistant.size()});
  sample.messages.push_back({"assistant", std::move(assistant)});

  for (const auto& m : mappings) {
    sample.mappings.add(TermMapping{m.source_term, m.target_term, std::nullopt});
  }
  return sample;
}

// --- line-delimited JSON serialization ------------------------------------

inline void to_json(nlohmann::json& j, const Message& m) {
  j = nlohmann::json{{"role", m.role}, {"content", m.content}};
}

inline void from_json(const nlohmann::json& j, Message& m) {
  j.at("role").get_to(m.role);
  j.at("content").get_to(m.content);
}

inline void to_json(nlohmann::json& j, const TermMapping& m) {
  j = nlohmann::json{{"source", m.source_term}, {"target", m.target_term}};
}

inline void from_json(const nlohmann::json& j, TermMapping& m) {
  j.at("source").get_to(m.source_term);
  j.at("target").get_to(m.target_term);
  m.source_span.reset();
}

inline void to_json(nlohmann::json& j, const TermMappingSet& s) {
  j = nlohmann::json::array();
  for (const auto& m : s.mappings) j.push_back(m);
}

inline void from_json(const nlohmann::json& j, TermMappingSet& s) {
  s.mappings.clear();
  for (const auto& item : j) s.add(item.get<TermMapping>());
}

inline void to_json(nlohmann::json& j, const InstructionSample& s) {
  nlohmann::json spans = nlohmann::json::array();
  for (const auto& span : s.loss_spans) {
    spans.push_back(nlohmann::json::array({span.message_index, span.begin, span.end}));
  }
  j = nlohmann::json{{"messages", s.messages},
                     {"mappings", s.mappings},
                     {"source_lang", s.source_lang},
                     {"target_lang", s.target_lang},
                     {"template_id", s.template_id},
                     {"chat_format", to_string(s.chat_format)},
                     {"loss_spans", std::move(spans)}};
}

inline void from_json(const nlohmann::json& j, InstructionSample& s) {
  j.at("messages").get_to(s.messages);
  j.at("mappings").get_to(s.mappings);
  j.at("source_lang").get_to(s.source_lang);
  j.at("target_lang").get_to(s.target_lang);
  j.at("template_id").get_to(s.template_id);
  s.chat_format = chat_format_from_string(j.at("chat_format").get<std::string>());
  s.loss_spans.clear();
  for (const auto& span : j.at("loss_spans")) {
    s.loss_spans.push_back(
        {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>(),
         span.at(2).get<std::size_t>()});
  }
}

inline void emit_samples(const std::vector<InstructionSample>& samples, std::ostream& out) {
  for (const auto& s : samples) {
    out << nlohmann::json(s).dump() << '\n';
  }
}

inline std::vector<InstructionSample> read_samples(std::istream& in) {
  std::vector<InstructionSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      samples.push_back(nlohmann::json::parse(line).get<InstructionSample>());
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("samples line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return samples;
}

}  // namespace termkit
