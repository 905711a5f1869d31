#include "kgchat/capabilities.hpp"

#include "kgchat/cypher/parser.hpp"

namespace kgchat::kg {

namespace {

CapabilityRun run_template(const std::string& text, const Graph& graph, const cypher::CvlPolicy& policy) {
  auto run = cypher::run_query(text, graph, policy);
  if (!run.report.accepted()) {
    std::string why;
    for (const auto& v : run.report.violations) why += " " + v.code + ": " + v.message + ";";
    throw CapabilityError("capability query rejected by the validation layer:" + why);
  }
  return {cypher::unparse(*run.ast), std::move(run.report), std::move(*run.table)};
}

void require_article(const Graph& graph, std::int64_t article_id) {
  if (!graph.find_article(article_id)) throw UnknownArticle(article_id);
}

std::size_t column(const cypher::ResultTable& t, const std::string& name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i] == name) return i;
  }
  throw CapabilityError("result is missing column '" + name + "'");
}

}  // namespace

std::string similar_articles_query(std::int64_t article_id, std::int64_t k) {
  return "MATCH (a1:Article {article_id: " + std::to_string(article_id) +
         "}), (a2:Article) WHERE a1 <> a2 "
         "WITH a1, a2, gds.similarity.cosine(a1.content_vector, a2.content_vector) AS similarity_score "
         "RETURN similarity_score, a1.article_id, a2.article_id "
         "ORDER BY similarity_score DESC LIMIT " +
         std::to_string(k);
}

std::string sentiment_query(std::int64_t article_id) {
  return "MATCH (n:Article) WHERE n.article_id = " + std::to_string(article_id) + " RETURN n.sentiment, n.compound";
}

std::string best_topic_candidate_query(std::int64_t article_id) {
  return "MATCH (a1:Article {article_id: " + std::to_string(article_id) +
         "}), (a2:Article)-[:HAS_TOPIC]->(t:Topic) WHERE a1 <> a2 "
         "WITH a1, a2, t, gds.similarity.cosine(a1.content_vector, a2.content_vector) AS similarity_score "
         "RETURN a1.article_id, a2.article_id AS similar_article, t.name AS predicted_topic, similarity_score "
         "ORDER BY similarity_score DESC LIMIT 1";
}

std::string topic_prediction_query(std::int64_t article_id, double threshold) {
  return "MATCH (a1:Article {article_id: " + std::to_string(article_id) +
         "}), (a2:Article)-[:HAS_TOPIC]->(t:Topic) WHERE a1 <> a2 "
         "WITH a1, a2, t, gds.similarity.cosine(a1.content_vector, a2.content_vector) AS similarity_score "
         "WHERE similarity_score > " +
         format_double(threshold) +
         " RETURN a1.article_id, a2.article_id AS similar_article, t.name AS predicted_topic, similarity_score "
         "ORDER BY similarity_score DESC LIMIT 1";
}

SimilarResult find_similar(const Graph& graph, std::int64_t article_id, std::int64_t k,
                           const cypher::CvlPolicy& policy) {
  require_article(graph, article_id);
  if (k < 1) throw CapabilityError("k must be at least 1");
  SimilarResult out{{}, run_template(similar_articles_query(article_id, k), graph, policy)};
  const auto& t = out.run.rows;
  const std::size_t score = column(t, "similarity_score");
  const std::size_t other = column(t, "a2.article_id");
  for (const auto& row : t.rows) {
    out.articles.push_back({row[other].as_int(), row[score].is_null() ? 0.0 : row[score].as_number()});
  }
  return out;
}

SentimentResult get_sentiment(const Graph& graph, std::int64_t article_id, const cypher::CvlPolicy& policy) {
  require_article(graph, article_id);
  SentimentResult out{{}, run_template(sentiment_query(article_id), graph, policy)};
  const auto& t = out.run.rows;
  if (t.rows.size() != 1) throw CapabilityError("sentiment query returned " + std::to_string(t.rows.size()) + " rows");
  out.sentiment.label = t.rows[0][column(t, "n.sentiment")].as_text();
  out.sentiment.compound = t.rows[0][column(t, "n.compound")].as_number();
  return out;
}

TopicResult predict_topic(const Graph& graph, std::int64_t article_id, double threshold,
                          const cypher::CvlPolicy& policy) {
  require_article(graph, article_id);
  TopicResult out{std::nullopt, run_template(topic_prediction_query(article_id, threshold), graph, policy)};
  const auto& t = out.run.rows;
  if (!t.rows.empty()) {
    const auto& row = t.rows.front();
    out.prediction = TopicPrediction{row[column(t, "predicted_topic")].as_text(),
                                     row[column(t, "similar_article")].as_int(),
                                     row[column(t, "similarity_score")].as_number()};
  }
  return out;
}

std::optional<double> best_topic_candidate_score(const Graph& graph, std::int64_t article_id,
                                                 const cypher::CvlPolicy& policy) {
  require_article(graph, article_id);
  auto run = run_template(best_topic_candidate_query(article_id), graph, policy);
  if (run.rows.rows.empty()) return std::nullopt;
  const auto& cell = run.rows.rows.front()[column(run.rows, "similarity_score")];
  if (cell.is_null()) return std::nullopt;
  return cell.as_number();
}

}  // namespace kgchat::kg
