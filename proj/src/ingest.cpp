#include "kgchat/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace kgchat::ingest {

namespace {

const std::string& required_text(const nlohmann::json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end()) throw std::invalid_argument(std::string("missing field '") + field + "'");
  if (!it->is_string()) throw std::invalid_argument(std::string("field '") + field + "' must be a string");
  return it->get_ref<const std::string&>();
}

std::int64_t required_int(const nlohmann::json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end()) throw std::invalid_argument(std::string("missing field '") + field + "'");
  if (!it->is_number_integer()) throw std::invalid_argument(std::string("field '") + field + "' must be an integer");
  return it->get<std::int64_t>();
}

}  // namespace

RawArticle parse_article(const nlohmann::json& record) {
  if (!record.is_object()) throw std::invalid_argument("record must be a JSON object");
  RawArticle a;
  a.article_id = required_int(record, "article_id");
  a.title = required_text(record, "title");
  a.content = required_text(record, "content");
  a.published_date = required_text(record, "published_date");
  a.publisher = required_text(record, "publisher");
  a.country = required_text(record, "country");
  auto topics = record.find("topics");
  if (topics != record.end()) {
    if (!topics->is_array()) throw std::invalid_argument("field 'topics' must be an array");
    for (const auto& t : *topics) {
      if (!t.is_object()) throw std::invalid_argument("topic entries must be objects");
      a.topics.push_back({required_int(t, "topic_id"), required_text(t, "name")});
    }
  }
  return a;
}

std::vector<RawArticle> parse_jsonl(std::string_view text) {
  std::vector<RawArticle> out;
  std::unordered_set<std::int64_t> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      RawArticle a = parse_article(nlohmann::json::parse(line));
      if (!seen.insert(a.article_id).second) {
        throw std::invalid_argument("duplicate article_id " + std::to_string(a.article_id));
      }
      out.push_back(std::move(a));
    } catch (const nlohmann::json::exception& e) {
      throw IngestError(line_no, std::string("invalid JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw IngestError(line_no, e.what());
    }
  }
  return out;
}

std::vector<RawArticle> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(0, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_jsonl(buf.str());
}

std::vector<std::string> preprocess(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char raw : text) {
    char c = raw;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      current += c;
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Lexicon::Lexicon(std::unordered_map<std::string, double> entries) : entries_(std::move(entries)) {}

Lexicon Lexicon::parse(std::string_view text) {
  std::unordered_map<std::string, double> entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) throw IngestError(line_no, "lexicon line must be term<TAB>valence");
    std::string term(line.substr(0, tab));
    std::string_view number = line.substr(tab + 1);
    double valence = 0;
    auto [p, ec] = std::from_chars(number.data(), number.data() + number.size(), valence);
    if (ec != std::errc() || p != number.data() + number.size()) {
      throw IngestError(line_no, "bad valence '" + std::string(number) + "'");
    }
    if (valence < -4.0 || valence > 4.0) throw IngestError(line_no, "valence outside [-4, 4]");
    if (preprocess(term) != std::vector<std::string>{term}) {
      throw IngestError(line_no, "term '" + term + "' is not a single preprocessed token");
    }
    entries[std::move(term)] = valence;
  }
  return Lexicon(std::move(entries));
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(0, "cannot open lexicon " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

double Lexicon::valence(std::string_view term) const {
  auto it = entries_.find(std::string(term));
  return it == entries_.end() ? 0.0 : it->second;
}

Lexicon Lexicon::negated() const {
  auto copy = entries_;
  for (auto& [term, v] : copy) v = -v;
  return Lexicon(std::move(copy));
}

bool is_negation(std::string_view token) {
  // Apostrophes are separators after preprocessing, so contractions appear
  // both fused ("dont") and split ("don" + "t").
  static const std::unordered_set<std::string_view> kNegations = {
      "not",    "no",      "never",   "none",    "nobody",  "nothing", "neither", "nor",     "nowhere",
      "cannot", "cant",    "without", "nope",    "rarely",  "seldom",  "despite", "aint",    "arent",
      "couldnt", "didnt",  "doesnt",  "dont",    "hadnt",   "hasnt",   "havent",  "isnt",    "mightnt",
      "mustnt", "neednt",  "shouldnt", "wasnt",  "werent",  "wont",    "wouldnt", "ain",     "aren",
      "couldn", "didn",    "doesn",   "don",     "hadn",    "hasn",    "haven",   "isn",     "mightn",
      "mustn",  "needn",   "shouldn", "wasn",    "weren",   "wouldn",
  };
  return kNegations.contains(token);
}

std::string sentiment_label(double compound) {
  if (compound >= kPositiveThreshold) return "positive";
  if (compound <= kNegativeThreshold) return "negative";
  return "neutral";
}

SentimentScore score_sentiment(const std::vector<std::string>& tokens, const Lexicon& lexicon) {
  double sum = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const double v = lexicon.valence(tokens[i]);
    if (v == 0.0) continue;
    bool negated = false;
    for (std::size_t back = 1; back <= kNegationWindow && back <= i; ++back) {
      if (is_negation(tokens[i - back])) {
        negated = true;
        break;
      }
    }
    sum += negated ? v * kNegationScalar : v;
  }
  const double compound = std::clamp(sum / std::sqrt(sum * sum + kNormalizationAlpha), -1.0, 1.0);
  return {compound, sentiment_label(compound)};
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> subword_features(std::string_view token) {
  std::vector<std::string> features{std::string(token)};
  const std::string wrapped = "<" + std::string(token) + ">";
  for (std::size_t n = 3; n <= 5; ++n) {
    for (std::size_t i = 0; i + n <= wrapped.size(); ++i) {
      std::string gram = wrapped.substr(i, n);
      if (std::find(features.begin(), features.end(), gram) == features.end()) features.push_back(std::move(gram));
    }
  }
  return features;
}

EmbeddingVector embed(const std::vector<std::string>& tokens, std::size_t dimension) {
  if (dimension < 2) throw std::invalid_argument("embedding dimension must be at least 2");
  EmbeddingVector out;
  out.values.assign(dimension, 0.0);
  for (const auto& token : tokens) {
    for (const auto& feature : subword_features(token)) {
      const std::uint64_t h = fnv1a64(feature);
      out.values[h % dimension] += (h >> 63) == 0 ? 1.0 : -1.0;
    }
  }
  double sq = 0.0;
  for (double x : out.values) sq += x * x;
  if (sq == 0.0) return out;
  const double norm = std::sqrt(sq);
  for (double& x : out.values) x /= norm;
  sq = 0.0;
  for (double x : out.values) sq += x * x;
  out.norm = std::sqrt(sq);
  return out;
}

Graph build_graph(const std::vector<RawArticle>& articles, std::size_t dimension, const Lexicon& lexicon) {
  if (dimension < 2) {
    throw GraphError(GraphError::Code::DimensionMismatch, "embedding dimension must be at least 2");
  }
  Graph g(dimension);
  std::unordered_map<std::int64_t, NodeId> topic_nodes;
  for (const auto& a : articles) {
    const auto tokens = preprocess(a.content);
    const auto sentiment = score_sentiment(tokens, lexicon);
    auto vec = embed(tokens, dimension);
    PropertyMap props{
        {"article_id", a.article_id},
        {"title", a.title},
        {"content", a.content},
        {"sentiment", sentiment.label},
        {"compound", sentiment.compound},
        {"content_vector", std::move(vec.values)},
        {"published_date", a.published_date},
        {"publisher", a.publisher},
        {"country", a.country},
    };
    const NodeId article = g.create_node(std::string(kArticleLabel), std::move(props));
    for (const auto& t : a.topics) {
      auto it = topic_nodes.find(t.topic_id);
      if (it == topic_nodes.end()) {
        const NodeId id = g.create_node(std::string(kTopicLabel), {{"topic_id", t.topic_id}, {"name", t.name}});
        it = topic_nodes.emplace(t.topic_id, id).first;
      } else if (g.get_node(it->second)->property("name")->as_text() != t.name) {
        throw GraphError(GraphError::Code::SchemaViolation,
                         "topic " + std::to_string(t.topic_id) + " appears with conflicting names");
      }
      g.create_edge(article, it->second, kHasTopic);
    }
  }
  return g;
}

}  // namespace kgchat::ingest
