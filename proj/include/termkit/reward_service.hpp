#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "termkit/instruction_gen.hpp"
#include "termkit/reward.hpp"
#include "termkit/version.hpp"

namespace termkit {

struct RewardItem {
  std::optional<std::string> prompt;
  std::optional<TermMappingSet> mappings;  // explicit constraints win over prompt parsing
  std::string hypothesis;
  std::optional<std::string> reference;
};

struct RewardRequest {
  std::vector<RewardItem> items;
  RewardWeights weights{};
  std::optional<int> group_size;
};

struct RewardResponse {
  std::vector<RewardBreakdown> results;
  // Present when group_size is set, >= 2, and divides the batch size:
  // consecutive blocks of group_size items are normalized together.
  std::optional<std::vector<double>> advantages;
};

// Client-visible failure; http_status distinguishes 4xx request errors from
// 5xx scoring failures, item_index names the offending request item.
struct ServiceError : std::runtime_error {
  ServiceError(int status, std::string error_code, const std::string& message,
               std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(message),
        http_status(status),
        code(std::move(error_code)),
        item_index(index) {}

  int http_status;
  std::string code;
  std::optional<std::size_t> item_index;
};

// Pure function from request to response; the HTTP layer adds nothing but
// serialization, so server responses are byte-comparable with direct calls.
inline RewardResponse score_batch(const RewardRequest& request) {
  try {
    request.weights.validate();
  } catch (const std::exception& e) {
    throw ServiceError(400, "invalid_request", e.what());
  }
  if (request.items.empty()) {
    throw ServiceError(400, "invalid_request", "empty batch");
  }
  if (request.group_size && *request.group_size < 2) {
    throw ServiceError(400, "invalid_request", "group_size must be >= 2");
  }

  RewardResponse response;
  response.results.reserve(request.items.size());
  for (std::size_t i = 0; i < request.items.size(); ++i) {
    const auto& item = request.items[i];
    if (!item.mappings && !item.prompt) {
      throw ServiceError(400, "invalid_request",
                         "item needs explicit mappings or a prompt to parse", i);
    }
    if (request.weights.w_bleu > 0.0 && !item.reference) {
      throw ServiceError(400, "invalid_request",
                         "reference required when w_bleu > 0", i);
    }
    TermMappingSet mappings =
        item.mappings ? *item.mappings : parse_mappings(*item.prompt);
    try {
      RewardBreakdown breakdown;
      if (item.reference) {
        breakdown =
            combined_reward(item.hypothesis, *item.reference, mappings, request.weights);
      } else {
        // Terminology-only scoring (w_bleu == 0, no reference supplied).
        breakdown.matched_terms = match_targets(item.hypothesis, mappings);
        breakdown.r_term = r_term(item.hypothesis, mappings);
        breakdown.r_bleu = 0.0;
        breakdown.combined = breakdown.r_term;
      }
      response.results.push_back(std::move(breakdown));
    } catch (const std::exception& e) {
      throw ServiceError(500, "scoring_failed", e.what(), i);
    }
  }

  if (request.group_size &&
      request.items.size() % static_cast<std::size_t>(*request.group_size) == 0) {
    const auto g = static_cast<std::size_t>(*request.group_size);
    std::vector<double> advantages;
    advantages.reserve(request.items.size());
    for (std::size_t start = 0; start < response.results.size(); start += g) {
      std::vector<double> rewards;
      rewards.reserve(g);
      for (std::size_t i = start; i < start + g; ++i) {
        rewards.push_back(response.results[i].combined);
      }
      for (double a : group_advantages(rewards).advantages) advantages.push_back(a);
    }
    response.advantages = std::move(advantages);
  }
  return response;
}

// --- wire format -------------------------------------------------------------

inline void to_json(nlohmann::json& j, const RewardItem& item) {
  j = nlohmann::json::object();
  if (item.prompt) j["prompt"] = *item.prompt;
  if (item.mappings) j["mappings"] = *item.mappings;
  j["hypothesis"] = item.hypothesis;
  if (item.reference) j["reference"] = *item.reference;
}

inline void from_json(const nlohmann::json& j, RewardItem& item) {
  item.prompt.reset();
  item.mappings.reset();
  item.reference.reset();
  if (j.contains("prompt")) item.prompt = j.at("prompt").get<std::string>();
  if (j.contains("mappings")) item.mappings = j.at("mappings").get<TermMappingSet>();
  j.at("hypothesis").get_to(item.hypothesis);
  if (j.contains("reference")) item.reference = j.at("reference").get<std::string>();
}

inline void to_json(nlohmann::json& j, const RewardRequest& r) {
  j = nlohmann::json{{"items", r.items},
                     {"weights", {{"w_bleu", r.weights.w_bleu}, {"w_term", r.weights.w_term}}}};
  if (r.group_size) j["group_size"] = *r.group_size;
}

inline void from_json(const nlohmann::json& j, RewardRequest& r) {
  r.items = j.at("items").get<std::vector<RewardItem>>();
  r.weights = RewardWeights{};
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    if (w.contains("w_bleu")) r.weights.w_bleu = w.at("w_bleu").get<double>();
    if (w.contains("w_term")) r.weights.w_term = w.at("w_term").get<double>();
  }
  r.group_size.reset();
  if (j.contains("group_size")) r.group_size = j.at("group_size").get<int>();
}

inline void to_json(nlohmann::json& j, const RewardBreakdown& b) {
  j = nlohmann::json{{"r_bleu", b.r_bleu},
                     {"r_term", b.r_term},
                     {"combined", b.combined},
                     {"matched_terms", b.matched_terms}};
}

inline void from_json(const nlohmann::json& j, RewardBreakdown& b) {
  j.at("r_bleu").get_to(b.r_bleu);
  j.at("r_term").get_to(b.r_term);
  j.at("combined").get_to(b.combined);
  b.matched_terms = j.at("matched_terms").get<std::vector<bool>>();
}

inline void to_json(nlohmann::json& j, const RewardResponse& r) {
  j = nlohmann::json{{"results", r.results}};
  if (r.advantages) j["advantages"] = *r.advantages;
}

inline void from_json(const nlohmann::json& j, RewardResponse& r) {
  r.results = j.at("results").get<std::vector<RewardBreakdown>>();
  r.advantages.reset();
  if (j.contains("advantages")) {
    r.advantages = j.at("advantages").get<std::vector<double>>();
  }
}

struct ServiceConfig {
  RewardWeights default_weights{};
  std::size_t max_batch_size = 4096;
};

// Stateless batch reward service:
//   POST /v1/reward  — score_batch over the JSON wire schema above
//   GET  /v1/health  — {"status":"ok","version":...}
class RewardServer {
 public:
  explicit RewardServer(ServiceConfig config = {}) : config_(std::move(config)) {
    server_.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(
          nlohmann::json{{"status", "ok"}, {"version", kVersion}}.dump(),
          "application/json");
    });
    server_.Post("/v1/reward", [this](const httplib::Request& req, httplib::Response& res) {
      handle_reward(req, res);
    });
  }

  httplib::Server& http() { return server_; }

  // Binds to an OS-assigned port; returns the port. Serving starts once
  // listen_after_bind() runs (usually on a dedicated thread).
  int bind_any_port(const std::string& host) { return server_.bind_to_any_port(host); }

  bool listen(const std::string& host, int port) { return server_.listen(host, port); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void wait_until_ready() { server_.wait_until_ready(); }
  void stop() { server_.stop(); }

 private:
  void handle_reward(const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      send_error(res, 400, "parse_error",
                 std::string(e.what()) + " (byte " + std::to_string(e.byte) + ")");
      return;
    }
    RewardRequest request;
    try {
      request = body.get<RewardRequest>();
      request.weights = body.contains("weights") ? request.weights : config_.default_weights;
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, "invalid_request", e.what());
      return;
    }
    if (request.items.size() > config_.max_batch_size) {
      send_error(res, 400, "invalid_request",
                 "batch exceeds max size " + std::to_string(config_.max_batch_size));
      return;
    }
    try {
      const RewardResponse response = score_batch(request);
      res.set_content(nlohmann::json(response).dump(), "application/json");
    } catch (const ServiceError& e) {
      send_error(res, e.http_status, e.code, e.what(), e.item_index);
    } catch (const std::exception& e) {
      send_error(res, 500, "internal_error", e.what());
    }
  }

  static void send_error(httplib::Response& res, int status, const std::string& code,
                         const std::string& message,
                         std::optional<std::size_t> item_index = std::nullopt) {
    nlohmann::json error = {{"code", code}, {"message", message}};
    if (item_index) error["item_index"] = *item_index;
    res.status = status;
    res.set_content(nlohmann::json{{"error", error}}.dump(), "application/json");
  }

  ServiceConfig config_;
  httplib::Server server_;
};

}  // namespace termkit
