#include "support.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>

#include "kgchat/ingest.hpp"
#include "kgchat/orchestrator.hpp"

namespace kgchat::testing {

namespace {

using Big = boost::multiprecision::cpp_dec_float_50;

FloatVector unit(std::size_t dim, std::size_t axis) {
  FloatVector v(dim, 0.0);
  v[axis] = 1.0;
  return v;
}

/// A vector whose cosine with e0 is `score`.
FloatVector at_cosine(std::size_t dim, double score, std::size_t other_axis) {
  FloatVector v(dim, 0.0);
  v[0] = score;
  v[other_axis] = std::sqrt(1.0 - score * score);
  return v;
}

PropertyMap article(std::int64_t id, FloatVector vec, double compound = 0.0) {
  return {{"article_id", id},
          {"title", "Article " + std::to_string(id)},
          {"content", "synthetic"},
          {"sentiment", ingest::sentiment_label(compound)},
          {"compound", compound},
          {"content_vector", std::move(vec)},
          {"published_date", "2023-10-16"},
          {"publisher", "Desk"},
          {"country", "IE"}};
}

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& items) {
  return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
}

bool coin(std::mt19937_64& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

}  // namespace

const std::map<std::string, std::array<bool, kAllCapabilities.size()>>& default_rbac_table() {
  // GenericResponse, Summarize, SimilarArticles, SentimentLookup,
  // TopicPrediction, FactCheck, IndustryPrediction, RawCypher
  static const std::map<std::string, std::array<bool, kAllCapabilities.size()>> table{
      {"admin", {true, true, true, true, true, true, true, true}},
      {"analyst", {true, true, true, true, true, false, false, false}},
      {"guest", {true, true, false, false, false, false, false, false}},
  };
  return table;
}

std::filesystem::path data_dir() { return KGCHAT_TEST_DATA_DIR; }
std::filesystem::path fixture_jsonl() { return data_dir() / "ainews_fixture.jsonl"; }
std::filesystem::path bundled_lexicon() { return KGCHAT_DEFAULT_LEXICON; }

const Graph& fixture_graph() {
  static const Graph graph = ingest::build_graph(ingest::read_jsonl(fixture_jsonl()), 64,
                                                 ingest::Lexicon::load(bundled_lexicon()));
  return graph;
}

Graph threshold_graph(double best) {
  constexpr std::size_t kDim = 8;
  Graph g(kDim);
  const NodeId a100 = g.create_node("Article", article(100, unit(kDim, 0), 0.3));
  const NodeId near = g.create_node("Article", article(200, at_cosine(kDim, best, 1)));
  const NodeId mid = g.create_node("Article", article(201, at_cosine(kDim, 0.5, 2)));
  const NodeId far = g.create_node("Article", article(202, at_cosine(kDim, 0.2, 3)));
  g.create_node("Article", article(203, at_cosine(kDim, 0.999, 4)));  // no topic
  const NodeId robotics = g.create_node("Topic", {{"topic_id", 1}, {"name", "Robotics"}});
  const NodeId ethics = g.create_node("Topic", {{"topic_id", 2}, {"name", "Ethics"}});
  g.create_edge(near, robotics, "HAS_TOPIC");
  g.create_edge(mid, ethics, "HAS_TOPIC");
  g.create_edge(far, ethics, "HAS_TOPIC");
  (void)a100;
  return g;
}

Graph random_graph(std::mt19937_64& rng, const RandomGraphOptions& options) {
  Graph g(options.dimension);
  const int total = uniform(rng, 0, static_cast<int>(options.max_nodes));
  const int n_topics = total == 0 ? 0 : uniform(rng, 0, std::min(10, total));
  const int n_articles = total - n_topics;

  std::vector<std::int64_t> article_ids(40);
  std::iota(article_ids.begin(), article_ids.end(), 1);
  std::shuffle(article_ids.begin(), article_ids.end(), rng);
  std::vector<std::int64_t> topic_ids(12);
  std::iota(topic_ids.begin(), topic_ids.end(), 1);
  std::shuffle(topic_ids.begin(), topic_ids.end(), rng);

  // Interleave labels so node id order differs from key order.
  std::vector<char> kinds(static_cast<std::size_t>(n_articles), 'A');
  kinds.insert(kinds.end(), static_cast<std::size_t>(n_topics), 'T');
  std::shuffle(kinds.begin(), kinds.end(), rng);

  const std::vector<std::string> titles{"alpha", "beta", "gamma"};
  const std::vector<double> compounds{-0.5, 0.0, 0.25, 0.5};
  const std::vector<double> components{-1.0, 0.0, 1.0, 2.0};
  const std::vector<std::string> publishers{"P1", "P2"};
  const std::vector<std::string> countries{"IE", "US"};
  const std::vector<std::string> names{"Robotics", "Ethics", "Vision", "NLP"};

  std::vector<NodeId> articles;
  std::vector<NodeId> topics;
  std::size_t ai = 0;
  std::size_t ti = 0;
  for (char k : kinds) {
    if (k == 'A') {
      PropertyMap p;
      p["article_id"] = article_ids[ai++];
      const double c = pick(rng, compounds);
      p["compound"] = c;
      p["sentiment"] = ingest::sentiment_label(c);
      p["content"] = "text";
      FloatVector vec(options.dimension, 0.0);
      if (!coin(rng, 0.15)) {
        for (auto& x : vec) x = pick(rng, components);
      }
      p["content_vector"] = vec;
      if (coin(rng, 0.8)) p["title"] = pick(rng, titles);
      if (coin(rng, 0.7)) p["publisher"] = pick(rng, publishers);
      if (coin(rng, 0.7)) p["country"] = pick(rng, countries);
      p["published_date"] = "2023-0" + std::to_string(uniform(rng, 1, 9)) + "-01";
      articles.push_back(g.create_node("Article", std::move(p)));
    } else {
      topics.push_back(g.create_node("Topic", {{"topic_id", topic_ids[ti++]}, {"name", pick(rng, names)}}));
    }
  }

  if (!articles.empty() && !topics.empty()) {
    std::vector<std::pair<NodeId, NodeId>> pairs;
    for (auto a : articles) {
      for (auto t : topics) pairs.emplace_back(a, t);
    }
    std::shuffle(pairs.begin(), pairs.end(), rng);
    const int n_edges = uniform(rng, 0, static_cast<int>(std::min(options.max_edges, pairs.size())));
    for (int i = 0; i < n_edges; ++i) g.create_edge(pairs[i].first, pairs[i].second, "HAS_TOPIC");
  }
  return g;
}

namespace {

struct Scope {
  std::vector<std::string> articles;  // Article-labeled variables
  std::vector<std::string> topics;    // Topic-labeled variables
  std::vector<std::string> any;       // unlabeled variables
};

std::string article_prop(std::mt19937_64& rng) {
  return pick(rng, std::vector<std::string>{"article_id", "title", "compound", "sentiment", "publisher", "country",
                                            "published_date"});
}

std::string topic_prop(std::mt19937_64& rng) { return pick(rng, std::vector<std::string>{"topic_id", "name"}); }

std::string literal_for(std::mt19937_64& rng, const std::string& prop) {
  if (prop == "article_id") return std::to_string(uniform(rng, 0, 41));
  if (prop == "topic_id") return std::to_string(uniform(rng, 0, 13));
  if (prop == "compound") return pick(rng, std::vector<std::string>{"0.0", "0.25", "-0.5", "0", "0.3"});
  if (prop == "title") return pick(rng, std::vector<std::string>{"'alpha'", "'beta'", "'zzz'", "3"});
  if (prop == "sentiment") return pick(rng, std::vector<std::string>{"'positive'", "'neutral'", "'negative'"});
  if (prop == "name") return pick(rng, std::vector<std::string>{"'Robotics'", "'Ethics'", "'M'"});
  if (prop == "publisher") return pick(rng, std::vector<std::string>{"'P1'", "'P2'", "null"});
  if (prop == "country") return pick(rng, std::vector<std::string>{"'IE'", "'US'"});
  return "'2023-05-01'";
}

std::string compare_op(std::mt19937_64& rng) {
  return pick(rng, std::vector<std::string>{"=", "<>", "<", ">", "<=", ">="});
}

std::string random_atom(std::mt19937_64& rng, const Scope& s) {
  std::vector<std::string> article_like = s.articles;
  article_like.insert(article_like.end(), s.any.begin(), s.any.end());
  std::vector<std::string> all_nodes = article_like;
  all_nodes.insert(all_nodes.end(), s.topics.begin(), s.topics.end());

  for (int attempt = 0; attempt < 8; ++attempt) {
    switch (uniform(rng, 0, 5)) {
      case 0:
      case 1:
        if (!article_like.empty()) {
          const auto prop = article_prop(rng);
          return pick(rng, article_like) + "." + prop + " " + compare_op(rng) + " " + literal_for(rng, prop);
        }
        break;
      case 2:
        if (!s.topics.empty()) {
          const auto prop = topic_prop(rng);
          return pick(rng, s.topics) + "." + prop + " " + compare_op(rng) + " " + literal_for(rng, prop);
        }
        break;
      case 3:
        if (all_nodes.size() >= 2) {
          return pick(rng, all_nodes) + " " + pick(rng, std::vector<std::string>{"=", "<>"}) + " " +
                 pick(rng, all_nodes);
        }
        break;
      case 4:
        if (article_like.size() >= 2) {
          const auto prop = article_prop(rng);
          return pick(rng, article_like) + "." + prop + " " + compare_op(rng) + " " + pick(rng, article_like) + "." +
                 prop;
        }
        break;
      case 5:
        if (!article_like.empty()) {
          return "gds.similarity.cosine(" + pick(rng, article_like) + ".content_vector, " + pick(rng, article_like) +
                 ".content_vector) " + compare_op(rng) + " " +
                 pick(rng, std::vector<std::string>{"0.0", "0.5", "0.9", "1"});
        }
        break;
    }
  }
  return "1 = 1";
}

std::string random_predicate(std::mt19937_64& rng, const Scope& s) {
  std::string p = random_atom(rng, s);
  if (coin(rng, 0.4)) p = p + pick(rng, std::vector<std::string>{" AND ", " OR "}) + random_atom(rng, s);
  if (coin(rng, 0.2)) p = "NOT (" + p + ")";
  return p;
}

}  // namespace

std::string random_query(std::mt19937_64& rng) {
  static const std::vector<std::pair<std::string, Scope>> kShapes = {
      {"(a:Article)", {{"a"}, {}, {}}},
      {"(a:Article), (b:Article)", {{"a", "b"}, {}, {}}},
      {"(a:Article)-[:HAS_TOPIC]->(t:Topic)", {{"a"}, {"t"}, {}}},
      {"(t:Topic)<-[:HAS_TOPIC]-(a:Article), (b:Article)", {{"a", "b"}, {"t"}, {}}},
      {"(a:Article)-[:HAS_TOPIC]->(t:Topic)<-[:HAS_TOPIC]-(b:Article)", {{"a", "b"}, {"t"}, {}}},
      {"(a)-[:HAS_TOPIC]->(t)", {{}, {}, {"a", "t"}}},
      {"(x)", {{}, {}, {"x"}}},
      {"(a:Article)-[:HAS_TOPIC]->(:Topic)", {{"a"}, {}, {}}},
      {"(a:Article)-[:HAS_TOPIC]->(t:Topic), (a)-[:HAS_TOPIC]->(u:Topic)", {{"a"}, {"t", "u"}, {}}},
      {"(t:Topic {name: 'Robotics'})<-[:HAS_TOPIC]-(a:Article)", {{"a"}, {"t"}, {}}},
      {"(a:Article {article_id: 7}), (b:Article)", {{"a", "b"}, {}, {}}},
      {"(a:Article), (t:Topic)", {{"a"}, {"t"}, {}}},
  };
  auto [pattern, scope] = pick(rng, kShapes);
  std::string q = "MATCH " + pattern;
  if (coin(rng, 0.7)) q += " WHERE " + random_predicate(rng, scope);

  // Projection candidates: (expression, is article-like source)
  std::vector<std::string> columns;
  auto add_props = [&](const Scope& sc) {
    for (const auto& v : sc.articles) columns.push_back(v + "." + article_prop(rng));
    for (const auto& v : sc.any) columns.push_back(v + "." + article_prop(rng));
    for (const auto& v : sc.topics) columns.push_back(v + "." + topic_prop(rng));
  };

  std::vector<std::string> aliases;
  if (coin(rng, 0.5)) {
    // WITH stage: keep a subset of node variables plus one computed value.
    Scope kept;
    std::vector<std::string> items;
    for (const auto& v : scope.articles) {
      if (coin(rng, 0.8)) kept.articles.push_back(v), items.push_back(v);
    }
    for (const auto& v : scope.topics) {
      if (coin(rng, 0.8)) kept.topics.push_back(v), items.push_back(v);
    }
    for (const auto& v : scope.any) {
      if (coin(rng, 0.8)) kept.any.push_back(v), items.push_back(v);
    }
    std::vector<std::string> article_like = scope.articles;
    article_like.insert(article_like.end(), scope.any.begin(), scope.any.end());
    std::string where;
    if (!article_like.empty()) {
      if (article_like.size() >= 2 && coin(rng)) {
        items.push_back("gds.similarity.cosine(" + article_like[0] + ".content_vector, " + article_like[1] +
                        ".content_vector) AS s");
        aliases.push_back("s");
        if (coin(rng, 0.5)) where = "s " + compare_op(rng) + " " + pick(rng, std::vector<std::string>{"0.0", "0.5"});
      } else {
        items.push_back(pick(rng, article_like) + ".compound AS c");
        aliases.push_back("c");
        if (coin(rng, 0.5)) where = "c " + compare_op(rng) + " 0.0";
      }
    }
    if (items.empty()) items.push_back(pattern.substr(1, 1) + " AS keep");
    q += " WITH ";
    for (std::size_t i = 0; i < items.size(); ++i) q += (i ? ", " : "") + items[i];
    if (!where.empty()) {
      q += " WHERE " + where;
    } else if (coin(rng, 0.3) && (!kept.articles.empty() || !kept.topics.empty() || !kept.any.empty())) {
      q += " WHERE " + random_predicate(rng, kept);
    }
    scope = kept;
  }
  add_props(scope);
  for (const auto& a : aliases) columns.push_back(a);
  if (columns.empty()) columns.push_back("1");

  std::shuffle(columns.begin(), columns.end(), rng);
  std::set<std::string> seen;
  std::vector<std::string> returned;
  std::vector<std::string> names;
  const int n_cols = uniform(rng, 1, std::min<int>(3, static_cast<int>(columns.size())));
  for (int i = 0; i < n_cols; ++i) {
    const std::string& expr = columns[static_cast<std::size_t>(i)];
    if (!seen.insert(expr).second) continue;
    const bool is_alias = std::find(aliases.begin(), aliases.end(), expr) != aliases.end();
    if (!is_alias && coin(rng, 0.4)) {
      const std::string alias = "col" + std::to_string(i);
      returned.push_back(expr + " AS " + alias);
      names.push_back(alias);
    } else {
      returned.push_back(expr);
      names.push_back(expr);
    }
  }
  q += " RETURN ";
  for (std::size_t i = 0; i < returned.size(); ++i) q += (i ? ", " : "") + returned[i];

  if (coin(rng, 0.6)) {
    q += " ORDER BY ";
    const int n_keys = uniform(rng, 1, static_cast<int>(names.size()));
    for (int i = 0; i < n_keys; ++i) {
      q += (i ? ", " : "") + names[static_cast<std::size_t>(i)] + (coin(rng) ? " DESC" : " ASC");
    }
  }
  if (coin(rng, 0.5)) q += " LIMIT " + std::to_string(uniform(rng, 1, 20));
  return q;
}

double cosine_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  Big dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += Big(a[i]) * Big(b[i]);
    na += Big(a[i]) * Big(a[i]);
    nb += Big(b[i]) * Big(b[i]);
  }
  if (na == 0 || nb == 0) return 0.0;
  return static_cast<double>(dot / (boost::multiprecision::sqrt(na) * boost::multiprecision::sqrt(nb)));
}

std::map<std::string, double> read_lexicon_oracle(const std::filesystem::path& path) {
  std::map<std::string, double> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    out[line.substr(0, tab)] = std::stod(line.substr(tab + 1));
  }
  return out;
}

std::vector<std::string> tokens_oracle(std::string_view text) {
  std::string lower(text);
  for (auto& c : lower) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
  }
  static const std::regex sep("[^a-z0-9]+");
  std::vector<std::string> out;
  for (std::sregex_token_iterator it(lower.begin(), lower.end(), sep, -1), end; it != end; ++it) {
    if (it->length() > 0) out.push_back(it->str());
  }
  return out;
}

long double compound_oracle(std::string_view text, const std::map<std::string, double>& lexicon) {
  static const std::set<std::string> negations = {
      "not",    "no",     "never",   "none",   "nobody",   "nothing", "neither", "nor",   "nowhere", "cannot",
      "cant",   "without", "nope",   "rarely", "seldom",   "despite", "aint",    "arent", "couldnt", "didnt",
      "doesnt", "dont",   "hadnt",   "hasnt",  "havent",   "isnt",    "mightnt", "mustnt", "neednt", "shouldnt",
      "wasnt",  "werent", "wont",    "wouldnt", "ain",     "aren",    "couldn",  "didn",  "doesn",   "don",
      "hadn",   "hasn",   "haven",   "isn",    "mightn",   "mustn",   "needn",   "shouldn", "wasn",  "weren",
      "wouldn",
  };
  const auto tokens = tokens_oracle(text);
  long double s = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto it = lexicon.find(tokens[i]);
    if (it == lexicon.end()) continue;
    bool negated = false;
    for (std::size_t j = (i >= 3 ? i - 3 : 0); j < i; ++j) negated = negated || negations.contains(tokens[j]);
    s += negated ? static_cast<long double>(it->second) * -0.74L : static_cast<long double>(it->second);
  }
  long double c = s / std::sqrt(s * s + 15.0L);
  return std::clamp(c, -1.0L, 1.0L);
}

std::vector<double> embedding_oracle(std::string_view text, std::size_t dimension) {
  auto fnv = [](const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  };
  std::vector<std::int64_t> counts(dimension, 0);
  for (const auto& token : tokens_oracle(text)) {
    std::set<std::string> seen{token};
    std::vector<std::string> features{token};
    const std::string w = "<" + token + ">";
    for (std::size_t n = 3; n <= 5; ++n) {
      for (std::size_t i = 0; i + n <= w.size(); ++i) {
        if (seen.insert(w.substr(i, n)).second) features.push_back(w.substr(i, n));
      }
    }
    for (const auto& f : features) {
      const auto h = fnv(f);
      counts[h % dimension] += (h & (1ULL << 63)) ? -1 : 1;
    }
  }
  std::int64_t sq = 0;
  for (auto c : counts) sq += c * c;
  std::vector<double> out(dimension, 0.0);
  if (sq == 0) return out;
  const double norm = std::sqrt(static_cast<double>(sq));
  for (std::size_t i = 0; i < dimension; ++i) out[i] = static_cast<double>(counts[i]) / norm;
  return out;
}

TempDir::TempDir() {
  static std::mt19937_64 rng{std::random_device{}()};
  path_ = std::filesystem::temp_directory_path() / ("kgchat-test-" + std::to_string(rng()));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

const std::vector<std::string>& hostile_corpus() {
  static const std::vector<std::string> corpus{
      "MATCH (n) DETACH DELETE n",
      "CREATE (n:Article {article_id: 1})",
      "create (n:Topic {topic_id: 1, name: 'x'})",
      "MATCH (n:Article) SET n.title = 'pwned' RETURN n.title",
      "MATCH (n:Article) REMOVE n.title RETURN n.article_id",
      "MERGE (t:Topic {topic_id: 9}) RETURN t.name",
      "MATCH (n:Article) WHERE n.article_id = 1 DELETE n",
      "DROP INDEX article_idx",
      "CREATE INDEX FOR (n:Article) ON (n.title)",
      "DROP CONSTRAINT article_key",
      "CALL db.labels()",
      "CALL dbms.security.listUsers()",
      "LOAD CSV FROM 'file:///etc/passwd' AS line RETURN line",
      "MATCH (n:Article) FOREACH (x IN [1] | SET n.title = 'x') RETURN 1",
      "MATCH (n:Article) RETURN n.title; MATCH (m) DETACH DELETE m",
      "MATCH (u:User) RETURN u.password",
      "MATCH (s:Secret) RETURN s.value",
      "MATCH (a:Article)-[:AUTHORED_BY]->(p:Article) RETURN p.title",
      "MATCH (n:Article) RETURN n.password",
      "MATCH (n:Topic) RETURN n.content",
      "MATCH (n:Article) RETURN apoc.text.join(n.title, 'x')",
      "MATCH (n:Article) RETURN toLower(n.title)",
      "MATCH (n:Article) RETURN gds.similarity.cosine(n.content_vector)",
      "MATCH (n:Article) RETURN n.title LIMIT 1000",
      "MATCH (n:Article) RETURN n.title LIMIT 0",
      "MATCH (n:Article) RETURN n",
      "MATCH (a), (b), (c), (d), (e) RETURN a.title",
      "MATCH (n:Article) RETURN n.title // comment",
      "MATCH (n:Article) RETURN m.title",
      "MATCH (n:Article) WITH n.title AS t RETURN t.name",
  };
  return corpus;
}

const std::vector<GoldenTurn>& golden_transcript() {
  static const std::vector<GoldenTurn> turns = {
      {"t-analyst-1", "Find articles similar to article 100"},
      {"t-analyst-1", "what's the sentiment of article 100?"},
      {"t-analyst-1", "Which topic fits article 100?"},
      {"t-analyst-1", "Please summarize article 101"},
      {"t-guest-1", "Find articles similar to article 100"},
      {"t-guest-1", "hello there"},
      {"t-guest-1", "summarize: Robots learn fast. Labs publish weekly. Investors wait."},
      {"t-admin-1", "cypher: MATCH (n:Article) WHERE n.article_id = 100 RETURN n.sentiment"},
      {"t-admin-1", "cypher: MATCH (n) DETACH DELETE n"},
      {"t-admin-1", "show the top 3 articles similar to article 105"},
      {"t-analyst-1", "please fact-check the funding claim"},
      {"t-admin-1",
       "cypher: MATCH (a:Article)-[:HAS_TOPIC]->(t:Topic) RETURN t.name, a.article_id ORDER BY a.article_id LIMIT 3"},
  };
  return turns;
}

std::vector<std::string> run_golden_transcript() {
  SharedGraph graph(fixture_graph());
  orch::Orchestrator orchestrator(graph, rbac::Policy::defaults(), {});
  std::vector<std::string> out;
  for (const auto& turn : golden_transcript()) {
    nlohmann::json j = orchestrator.chat("golden", turn.message, turn.token);
    j.erase("turn_id");
    out.push_back(j.dump());
  }
  return out;
}

}  // namespace kgchat::testing
