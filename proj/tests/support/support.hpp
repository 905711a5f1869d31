#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "kgchat/capability.hpp"
#include "kgchat/graph_store.hpp"

namespace kgchat::testing {

// Reference query texts, whitespace joined onto single lines. The unbound
// topic query uses `t` without binding it and must be rejected.
inline constexpr std::string_view kSimilarityQuery =
    "MATCH (a1:Article {article_id: 100}), (a2:Article) WHERE a1 <> a2 "
    "WITH a1, a2, gds.similarity.cosine (a1.content_vector, a2.content_vector) AS similarity_score "
    "RETURN similarity_score, a1.article_id, a2.article_id ORDER BY similarity_score DESC LIMIT 5";
inline constexpr std::string_view kSentimentQuery = "MATCH (n:Article) WHERE n.article_id = 100 RETURN n.sentiment";
inline constexpr std::string_view kTopicQueryUnbound =
    "MATCH (a1:Article {article_id: 100}), (a2:Article) WHERE a1 <> a2 "
    "WITH a1, a2, gds.similarity.cosine( a1.content_vector, a2.content_vector) AS similarity_score "
    "WHERE similarity_score > 0.97 "
    "RETURN a1.article_id, a2.article_id AS similar_article, t.name AS predicted_topic, similarity_score LIMIT 1";
inline constexpr std::string_view kTopicQuery =
    "MATCH (a1:Article {article_id: 100}), (a2:Article)-[:HAS_TOPIC]->(t:Topic) WHERE a1 <> a2 "
    "WITH a1, a2, t, gds.similarity.cosine(a1.content_vector, a2.content_vector) AS similarity_score "
    "WHERE similarity_score > 0.97 "
    "RETURN a1.article_id, a2.article_id AS similar_article, t.name AS predicted_topic, similarity_score "
    "ORDER BY similarity_score DESC LIMIT 1";

/// Queries that must never reach the evaluator: writes, DDL, procedure
/// calls, schema probing and resource abuse.
const std::vector<std::string>& hostile_corpus();

/// Documented Grant (true) / Deny table of the default policy, columns in
/// kAllCapabilities order.
const std::map<std::string, std::array<bool, kAllCapabilities.size()>>& default_rbac_table();

std::filesystem::path data_dir();
std::filesystem::path fixture_jsonl();
std::filesystem::path bundled_lexicon();

/// The 50-article fixture ingested at dimension 64 with the bundled lexicon.
const Graph& fixture_graph();

/// Article 100 plus three topic-bearing articles whose vectors score exactly
/// `best`, 0.5 and 0.2 against it (the best one carries topic "Robotics"),
/// and one article without topics at 0.999.
Graph threshold_graph(double best);

struct RandomGraphOptions {
  std::size_t max_nodes = 30;
  std::size_t max_edges = 60;
  std::size_t dimension = 4;
};

/// Small random graph with deliberate ties, zero vectors and missing
/// optional properties.
Graph random_graph(std::mt19937_64& rng, const RandomGraphOptions& options = {});

/// A random read-only query over the schema, accepted by the default policy
/// (labels, properties, cosine) but with no guarantee of a LIMIT.
std::string random_query(std::mt19937_64& rng);

/// cosine(a, b) computed in 50-digit decimal arithmetic; 0 for a zero norm.
double cosine_oracle(const std::vector<double>& a, const std::vector<double>& b);

/// Reads a "term<TAB>valence" file without using the production parser.
std::map<std::string, double> read_lexicon_oracle(const std::filesystem::path& path);

/// Compound score computed from raw text: regex tokenization, 3-token
/// negation window, s / sqrt(s^2 + 15), clamped.
long double compound_oracle(std::string_view text, const std::map<std::string, double>& lexicon);

/// Tokens by splitting the lowercased text on /[^a-z0-9]+/.
std::vector<std::string> tokens_oracle(std::string_view text);

/// Signed feature-hashing embedding computed with integer accumulation.
std::vector<double> embedding_oracle(std::string_view text, std::size_t dimension);

struct GoldenTurn {
  std::string token;
  std::string message;
};

/// Twelve turns over the fixture mixing the three default roles, every
/// implemented capability, denials and a rejected raw query.
const std::vector<GoldenTurn>& golden_transcript();

/// Plays the transcript on a fresh orchestrator (default policy, mock
/// backend, live clock and random turn ids) over a copy of the fixture and
/// returns each ChatResponse as JSON with turn_id removed.
std::vector<std::string> run_golden_transcript();

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace kgchat::testing
