#include "kgchat/graph_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <span>

namespace kgchat {

namespace {

struct RequiredProperty {
  std::string_view name;
  std::string_view type;
};

constexpr RequiredProperty kArticleRequired[] = {
    {"article_id", "Integer"}, {"content", "Text"},        {"sentiment", "Text"},
    {"compound", "Float"},     {"content_vector", "FloatVector"},
};

constexpr RequiredProperty kTopicRequired[] = {{"topic_id", "Integer"}, {"name", "Text"}};

std::span<const RequiredProperty> required_for(std::string_view label) {
  if (label == kArticleLabel) return kArticleRequired;
  if (label == kTopicLabel) return kTopicRequired;
  return {};
}

// Optional article attributes that, when present, must be Text.
constexpr std::string_view kArticleTextFields[] = {"title", "published_date", "publisher", "country"};

std::string_view key_of(std::string_view label) {
  return label == kArticleLabel ? "article_id" : "topic_id";
}

}  // namespace

std::string_view to_string(GraphError::Code code) {
  switch (code) {
    case GraphError::Code::DuplicateKey: return "DuplicateKey";
    case GraphError::Code::SchemaViolation: return "SchemaViolation";
    case GraphError::Code::UnknownLabel: return "UnknownLabel";
    case GraphError::Code::UnknownNode: return "UnknownNode";
    case GraphError::Code::LabelMismatch: return "LabelMismatch";
    case GraphError::Code::DuplicateEdge: return "DuplicateEdge";
    case GraphError::Code::DimensionMismatch: return "DimensionMismatch";
    case GraphError::Code::IoFailure: return "IoFailure";
    case GraphError::Code::FormatError: return "FormatError";
  }
  return "Unknown";
}

const PropertyValue* Node::property(std::string_view name) const {
  auto it = properties.find(name);
  return it == properties.end() ? nullptr : &it->second;
}

Graph::Graph(std::size_t dimension) : dimension_(dimension) {
  if (dimension < 1) throw GraphError(GraphError::Code::DimensionMismatch, "embedding dimension must be positive");
}

void Graph::check_vectors(const PropertyMap& properties) const {
  for (const auto& [name, value] : properties) {
    if (!value.is_vector()) continue;
    const auto& vec = value.as_vector();
    if (vec.size() != dimension_) {
      throw GraphError(GraphError::Code::DimensionMismatch,
                       "property '" + name + "' has length " + std::to_string(vec.size()) + ", graph dimension is " +
                           std::to_string(dimension_));
    }
    if (!std::all_of(vec.begin(), vec.end(), [](double x) { return std::isfinite(x); })) {
      throw GraphError(GraphError::Code::SchemaViolation, "property '" + name + "' contains a non-finite entry");
    }
  }
}

void Graph::check_schema(const std::string& label, const PropertyMap& properties) const {
  if (label != kArticleLabel && label != kTopicLabel) {
    throw GraphError(GraphError::Code::UnknownLabel, "unknown label '" + label + "'");
  }
  for (const auto& req : required_for(label)) {
    const auto it = properties.find(req.name);
    if (it == properties.end()) {
      throw GraphError(GraphError::Code::SchemaViolation,
                       label + " node is missing required property '" + std::string(req.name) + "'");
    }
    if (it->second.type_name() != req.type) {
      throw GraphError(GraphError::Code::SchemaViolation, label + "." + std::string(req.name) + " must be " +
                                                              std::string(req.type) + ", got " +
                                                              std::string(it->second.type_name()));
    }
  }
  if (label == kArticleLabel) {
    const double compound = properties.find("compound")->second.as_float();
    if (!(compound >= -1.0 && compound <= 1.0)) {
      throw GraphError(GraphError::Code::SchemaViolation, "Article.compound must lie in [-1, 1]");
    }
    for (auto field : kArticleTextFields) {
      auto it = properties.find(field);
      if (it != properties.end() && !it->second.is_text()) {
        throw GraphError(GraphError::Code::SchemaViolation, "Article." + std::string(field) + " must be Text");
      }
    }
  }
  check_vectors(properties);
}

std::size_t Graph::index_of(NodeId id) const {
  auto it = node_slot_.find(id.value);
  if (it == node_slot_.end()) {
    throw GraphError(GraphError::Code::UnknownNode, "unknown node " + std::to_string(id.value));
  }
  return it->second;
}

void Graph::insert_node(Node node) {
  check_schema(node.label, node.properties);
  const auto key = node.properties.find(key_of(node.label))->second.as_int();
  auto& index = node.label == kArticleLabel ? article_index_ : topic_index_;
  if (index.contains(key)) {
    throw GraphError(GraphError::Code::DuplicateKey,
                     std::string(key_of(node.label)) + " " + std::to_string(key) + " already exists");
  }
  if (node_slot_.contains(node.id.value)) {
    throw GraphError(GraphError::Code::FormatError, "duplicate node id " + std::to_string(node.id.value));
  }
  const std::size_t slot = nodes_.size();
  index.emplace(key, slot);
  node_slot_.emplace(node.id.value, slot);
  next_node_id_ = std::max(next_node_id_, node.id.value + 1);
  nodes_.push_back(std::move(node));
  out_edges_.emplace_back();
  in_edges_.emplace_back();
}

NodeId Graph::create_node(std::string label, PropertyMap properties) {
  NodeId id{next_node_id_};
  insert_node(Node{id, std::move(label), std::move(properties)});
  return id;
}

void Graph::insert_edge(Edge edge) {
  if (edge.kind != kHasTopic) {
    throw GraphError(GraphError::Code::SchemaViolation, "unknown relationship kind '" + edge.kind + "'");
  }
  const std::size_t s = index_of(edge.source);
  const std::size_t t = index_of(edge.target);
  if (nodes_[s].label != kArticleLabel || nodes_[t].label != kTopicLabel) {
    throw GraphError(GraphError::Code::LabelMismatch, "HAS_TOPIC must connect an Article to a Topic, got " +
                                                          nodes_[s].label + " -> " + nodes_[t].label);
  }
  for (std::size_t e : out_edges_[s]) {
    if (edges_[e].target == edge.target && edges_[e].kind == edge.kind) {
      throw GraphError(GraphError::Code::DuplicateEdge, "edge " + std::to_string(edge.source.value) + " -> " +
                                                            std::to_string(edge.target.value) + " already exists");
    }
  }
  const std::size_t slot = edges_.size();
  next_edge_id_ = std::max(next_edge_id_, edge.id.value + 1);
  edges_.push_back(std::move(edge));
  out_edges_[s].push_back(slot);
  in_edges_[t].push_back(slot);
}

EdgeId Graph::create_edge(NodeId source, NodeId target, std::string_view kind) {
  EdgeId id{next_edge_id_};
  insert_edge(Edge{id, source, target, std::string(kind)});
  return id;
}

void Graph::set_property(NodeId id, std::string name, PropertyValue value) {
  Node& node = nodes_[index_of(id)];
  if (name == key_of(node.label)) {
    throw GraphError(GraphError::Code::SchemaViolation, "'" + name + "' is a key and cannot be updated");
  }
  PropertyMap updated = node.properties;
  updated[name] = std::move(value);
  check_schema(node.label, updated);
  node.properties = std::move(updated);
}

const Node* Graph::get_node(NodeId id) const {
  auto it = node_slot_.find(id.value);
  return it == node_slot_.end() ? nullptr : &nodes_[it->second];
}

const Node* Graph::find_article(std::int64_t article_id) const {
  auto it = article_index_.find(article_id);
  return it == article_index_.end() ? nullptr : &nodes_[it->second];
}

const Node* Graph::find_topic(std::int64_t topic_id) const {
  auto it = topic_index_.find(topic_id);
  return it == topic_index_.end() ? nullptr : &nodes_[it->second];
}

std::vector<const Node*> Graph::nodes_by_label(std::string_view label) const {
  if (label != kArticleLabel && label != kTopicLabel) {
    throw GraphError(GraphError::Code::UnknownLabel, "unknown label '" + std::string(label) + "'");
  }
  std::vector<const Node*> out;
  for (const auto& n : nodes_) {
    if (n.label == label) out.push_back(&n);
  }
  // nodes_ is kept in ascending id order.
  return out;
}

std::vector<const Node*> Graph::neighbors(NodeId id, std::string_view kind, Direction direction) const {
  const std::size_t slot = index_of(id);
  if (kind != kHasTopic) {
    throw GraphError(GraphError::Code::SchemaViolation, "unknown relationship kind '" + std::string(kind) + "'");
  }
  std::vector<const Node*> out;
  const auto& adjacency = direction == Direction::Out ? out_edges_[slot] : in_edges_[slot];
  for (std::size_t e : adjacency) {
    const Edge& edge = edges_[e];
    if (edge.kind != kind) continue;
    out.push_back(&nodes_[index_of(direction == Direction::Out ? edge.target : edge.source)]);
  }
  std::sort(out.begin(), out.end(), [](const Node* a, const Node* b) { return a->id < b->id; });
  return out;
}

nlohmann::json Graph::to_json() const {
  using nlohmann::json;
  json nodes = json::array();
  for (const auto& n : nodes_) {
    json props = json::object();
    for (const auto& [k, v] : n.properties) props[k] = v;
    nodes.push_back({{"id", n.id.value}, {"label", n.label}, {"properties", std::move(props)}});
  }
  json edges = json::array();
  for (const auto& e : edges_) {
    edges.push_back({{"id", e.id.value}, {"source", e.source.value}, {"target", e.target.value}, {"kind", e.kind}});
  }
  return {{"version", kSnapshotVersion}, {"dimension", dimension_}, {"nodes", std::move(nodes)},
          {"edges", std::move(edges)}};
}

Graph Graph::from_json(const nlohmann::json& doc) {
  auto fail = [](const std::string& what) { return GraphError(GraphError::Code::FormatError, what); };
  try {
    if (!doc.is_object()) throw fail("snapshot must be a JSON object");
    if (doc.value("version", "") != kSnapshotVersion) {
      throw fail("unsupported snapshot version '" + doc.value("version", std::string("<missing>")) + "'");
    }
    const auto& dim = doc.at("dimension");
    if (!dim.is_number_unsigned() || dim.get<std::uint64_t>() < 1) throw fail("dimension must be a positive integer");
    Graph g(dim.get<std::size_t>());

    std::vector<Node> nodes;
    for (const auto& jn : doc.at("nodes")) {
      Node n;
      n.id = NodeId{jn.at("id").get<std::uint64_t>()};
      n.label = jn.at("label").get<std::string>();
      for (const auto& [k, v] : jn.at("properties").items()) n.properties.emplace(k, v.get<PropertyValue>());
      nodes.push_back(std::move(n));
    }
    std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.id < b.id; });
    for (auto& n : nodes) {
      if (n.id.value == 0) throw fail("node id 0 is reserved");
      g.insert_node(std::move(n));
    }

    std::vector<Edge> edges;
    for (const auto& je : doc.at("edges")) {
      edges.push_back(Edge{EdgeId{je.at("id").get<std::uint64_t>()}, NodeId{je.at("source").get<std::uint64_t>()},
                           NodeId{je.at("target").get<std::uint64_t>()}, je.at("kind").get<std::string>()});
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.id < b.id; });
    std::set<std::uint64_t> edge_ids;
    for (auto& e : edges) {
      if (!edge_ids.insert(e.id.value).second) throw fail("duplicate edge id " + std::to_string(e.id.value));
      if (!g.get_node(e.source) || !g.get_node(e.target)) {
        throw fail("edge " + std::to_string(e.id.value) + " references a missing node");
      }
      g.insert_edge(std::move(e));
    }
    return g;
  } catch (const GraphError& e) {
    if (e.code() == GraphError::Code::FormatError) throw;
    throw fail(std::string("snapshot integrity violation: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("malformed snapshot: ") + e.what());
  } catch (const std::exception& e) {
    throw fail(std::string("malformed snapshot: ") + e.what());
  }
}

void Graph::save_snapshot(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw GraphError(GraphError::Code::IoFailure, "cannot open " + path.string() + " for writing");
  out << to_json().dump() << '\n';
  out.flush();
  if (!out) throw GraphError(GraphError::Code::IoFailure, "failed writing " + path.string());
}

Graph Graph::load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GraphError(GraphError::Code::IoFailure, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw GraphError(GraphError::Code::FormatError, path.string() + ": " + e.what());
  }
  return from_json(doc);
}

}  // namespace kgchat
