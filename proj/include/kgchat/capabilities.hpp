#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgchat/cypher/evaluator.hpp"
#include "kgchat/cypher/validator.hpp"
#include "kgchat/graph_store.hpp"
#include "kgchat/ingest.hpp"

namespace kgchat::kg {

inline constexpr std::int64_t kDefaultSimilarK = 5;
inline constexpr double kDefaultTopicThreshold = 0.97;

/// The exact query that ran, its validation verdict and its rows.
struct CapabilityRun {
  std::string cypher_text;
  cypher::ValidationReport validation;
  cypher::ResultTable rows;
};

struct SimilarArticle {
  std::int64_t article_id = 0;
  double score = 0.0;

  friend bool operator==(const SimilarArticle&, const SimilarArticle&) = default;
};

struct TopicPrediction {
  std::string topic_name;
  std::int64_t via_article = 0;
  double score = 0.0;

  friend bool operator==(const TopicPrediction&, const TopicPrediction&) = default;
};

class UnknownArticle : public std::runtime_error {
 public:
  explicit UnknownArticle(std::int64_t id)
      : std::runtime_error("article " + std::to_string(id) + " does not exist"), article_id_(id) {}
  std::int64_t article_id() const { return article_id_; }

 private:
  std::int64_t article_id_;
};

/// A template query failed validation or produced rows of an unexpected shape.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Query templates.
std::string similar_articles_query(std::int64_t article_id, std::int64_t k);
std::string sentiment_query(std::int64_t article_id);
std::string topic_prediction_query(std::int64_t article_id, double threshold);
/// The topic query without the threshold filter: the best topic-bearing neighbor.
std::string best_topic_candidate_query(std::int64_t article_id);

struct SimilarResult {
  std::vector<SimilarArticle> articles;
  CapabilityRun run;
};

struct SentimentResult {
  ingest::SentimentScore sentiment;
  CapabilityRun run;
};

struct TopicResult {
  std::optional<TopicPrediction> prediction;
  CapabilityRun run;
};

/// Top-k most similar other articles, descending score, ties by ascending
/// article_id. Throws UnknownArticle.
SimilarResult find_similar(const Graph& graph, std::int64_t article_id, std::int64_t k = kDefaultSimilarK,
                           const cypher::CvlPolicy& policy = {});

/// Stored sentiment label and compound. Throws UnknownArticle.
SentimentResult get_sentiment(const Graph& graph, std::int64_t article_id, const cypher::CvlPolicy& policy = {});

/// Topic of the most similar article scoring strictly above `threshold`.
/// Throws UnknownArticle.
TopicResult predict_topic(const Graph& graph, std::int64_t article_id, double threshold = kDefaultTopicThreshold,
                          const cypher::CvlPolicy& policy = {});

/// Best similarity to any topic-bearing article, or nullopt when there is none.
std::optional<double> best_topic_candidate_score(const Graph& graph, std::int64_t article_id,
                                                 const cypher::CvlPolicy& policy = {});

}  // namespace kgchat::kg
