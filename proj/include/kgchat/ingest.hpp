#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "kgchat/graph_store.hpp"

namespace kgchat::ingest {

struct TopicRef {
  std::int64_t topic_id = 0;
  std::string name;
};

struct RawArticle {
  std::int64_t article_id = 0;
  std::string title;
  std::string content;
  std::string published_date;
  std::string publisher;
  std::string country;
  std::vector<TopicRef> topics;
};

/// Malformed input record; `line` is 1-based, 0 when not line-oriented.
class IngestError : public std::runtime_error {
 public:
  IngestError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

RawArticle parse_article(const nlohmann::json& record);
std::vector<RawArticle> read_jsonl(const std::filesystem::path& path);
std::vector<RawArticle> parse_jsonl(std::string_view text);

/// Lowercases ASCII and splits on every character outside [a-z0-9].
std::vector<std::string> preprocess(std::string_view text);

/// term -> valence in [-4, 4].
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::unordered_map<std::string, double> entries);

  /// Reads "term<TAB>valence" lines; blank lines and lines starting with '#'
  /// are skipped.
  static Lexicon load(const std::filesystem::path& path);
  static Lexicon parse(std::string_view text);

  double valence(std::string_view term) const;
  std::size_t size() const { return entries_.size(); }
  const std::unordered_map<std::string, double>& entries() const { return entries_; }

  /// Same terms, every valence negated.
  Lexicon negated() const;

 private:
  std::unordered_map<std::string, double> entries_;
};

inline constexpr double kNegationScalar = -0.74;
inline constexpr double kNormalizationAlpha = 15.0;
inline constexpr double kPositiveThreshold = 0.05;
inline constexpr double kNegativeThreshold = -0.05;
inline constexpr std::size_t kNegationWindow = 3;

bool is_negation(std::string_view token);

struct SentimentScore {
  double compound = 0.0;
  std::string label = "neutral";
};

std::string sentiment_label(double compound);

/// s = sum of valence(t_i) * (-0.74 if any of the previous three tokens is a
/// negation, else 1); compound = s / sqrt(s^2 + 15), clamped to [-1, 1].
SentimentScore score_sentiment(const std::vector<std::string>& tokens, const Lexicon& lexicon);

struct EmbeddingVector {
  FloatVector values;
  double norm = 0.0;  // measured L2 norm of `values`: 1 within rounding, or 0
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// The token plus character 3/4/5-grams of "<token>", duplicates removed,
/// in first-occurrence order.
std::vector<std::string> subword_features(std::string_view token);

/// Signed feature hashing into `dimension` buckets, then L2 normalization.
/// Throws std::invalid_argument when dimension < 2.
EmbeddingVector embed(const std::vector<std::string>& tokens, std::size_t dimension);

/// One Article node per record (input order), one Topic node per distinct
/// topic_id (first appearance), one HAS_TOPIC edge per assignment.
Graph build_graph(const std::vector<RawArticle>& articles, std::size_t dimension, const Lexicon& lexicon);

}  // namespace kgchat::ingest
