#include "kgchat/capability.hpp"

namespace kgchat {

std::string_view to_string(Capability c) {
  switch (c) {
    case Capability::GenericResponse: return "GenericResponse";
    case Capability::Summarize: return "Summarize";
    case Capability::SimilarArticles: return "SimilarArticles";
    case Capability::SentimentLookup: return "SentimentLookup";
    case Capability::TopicPrediction: return "TopicPrediction";
    case Capability::FactCheck: return "FactCheck";
    case Capability::IndustryPrediction: return "IndustryPrediction";
    case Capability::RawCypher: return "RawCypher";
  }
  return "?";
}

std::optional<Capability> parse_capability(std::string_view name) {
  for (auto c : kAllCapabilities) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

bool is_kg_capability(Capability c) {
  return c == Capability::SimilarArticles || c == Capability::SentimentLookup || c == Capability::TopicPrediction;
}

void to_json(nlohmann::json& j, const Intent& intent) {
  j = nlohmann::json::object();
  j["capability"] = to_string(intent.capability);
  nlohmann::json args = nlohmann::json::object();
  if (intent.article_id) args["article_id"] = *intent.article_id;
  if (intent.k) args["k"] = *intent.k;
  if (intent.threshold) args["threshold"] = *intent.threshold;
  if (!intent.query_text.empty()) args["query_text"] = intent.query_text;
  j["args"] = std::move(args);
}

}  // namespace kgchat
