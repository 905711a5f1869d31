#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace kgchat {

/// Routed intent classes. FactCheck and IndustryPrediction are recognized but
/// have no implementation; RawCypher runs caller-supplied queries through the
/// validation layer.
enum class Capability {
  GenericResponse,
  Summarize,
  SimilarArticles,
  SentimentLookup,
  TopicPrediction,
  FactCheck,
  IndustryPrediction,
  RawCypher,
};

inline constexpr std::array kAllCapabilities = {
    Capability::GenericResponse, Capability::Summarize,  Capability::SimilarArticles,    Capability::SentimentLookup,
    Capability::TopicPrediction, Capability::FactCheck, Capability::IndustryPrediction, Capability::RawCypher,
};

std::string_view to_string(Capability c);
std::optional<Capability> parse_capability(std::string_view name);

/// Capabilities answered from the knowledge graph through query templates.
bool is_kg_capability(Capability c);

/// A routed request: the capability plus whatever arguments the router
/// extracted from the message.
struct Intent {
  Capability capability = Capability::GenericResponse;
  std::optional<std::int64_t> article_id;
  std::optional<std::int64_t> k;
  std::optional<double> threshold;
  std::string query_text;  // RawCypher query, or inline text to summarize

  friend bool operator==(const Intent&, const Intent&) = default;
};

void to_json(nlohmann::json& j, const Intent& intent);

}  // namespace kgchat
