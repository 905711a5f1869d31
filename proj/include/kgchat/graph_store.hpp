#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "kgchat/property_value.hpp"

namespace kgchat {

inline constexpr std::string_view kArticleLabel = "Article";
inline constexpr std::string_view kTopicLabel = "Topic";
inline constexpr std::string_view kHasTopic = "HAS_TOPIC";
inline constexpr std::string_view kSnapshotVersion = "kgchat-snapshot-1";

struct NodeId {
  std::uint64_t value = 0;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

struct EdgeId {
  std::uint64_t value = 0;
  friend auto operator<=>(const EdgeId&, const EdgeId&) = default;
};

struct Node {
  NodeId id;
  std::string label;
  PropertyMap properties;

  /// Property lookup; nullptr when absent.
  const PropertyValue* property(std::string_view name) const;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  EdgeId id;
  NodeId source;
  NodeId target;
  std::string kind;

  friend bool operator==(const Edge&, const Edge&) = default;
};

enum class Direction { Out, In };

class GraphError : public std::runtime_error {
 public:
  enum class Code {
    DuplicateKey,
    SchemaViolation,
    UnknownLabel,
    UnknownNode,
    LabelMismatch,
    DuplicateEdge,
    DimensionMismatch,
    IoFailure,
    FormatError,
  };

  GraphError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

std::string_view to_string(GraphError::Code code);

/// Property graph of Article and Topic nodes joined by directed HAS_TOPIC edges.
///
/// Node ids are assigned sequentially from 1 and never reused. Every query
/// method returns results in ascending NodeId order. The class itself is not
/// synchronized; see SharedGraph for the readers-writer wrapper.
class Graph {
 public:
  explicit Graph(std::size_t dimension = 64);

  std::size_t dimension() const { return dimension_; }

  NodeId create_node(std::string label, PropertyMap properties);
  EdgeId create_edge(NodeId source, NodeId target, std::string_view kind);

  /// Adds or replaces a non-key property. Required properties keep their types;
  /// article_id and topic_id cannot be changed.
  void set_property(NodeId id, std::string name, PropertyValue value);

  const Node* get_node(NodeId id) const;
  const Node* find_article(std::int64_t article_id) const;
  const Node* find_topic(std::int64_t topic_id) const;

  std::vector<const Node*> nodes_by_label(std::string_view label) const;
  std::vector<const Node*> neighbors(NodeId id, std::string_view kind, Direction direction) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t article_count() const { return article_index_.size(); }
  std::size_t topic_count() const { return topic_index_.size(); }

  nlohmann::json to_json() const;
  static Graph from_json(const nlohmann::json& doc);

  void save_snapshot(const std::filesystem::path& path) const;
  static Graph load_snapshot(const std::filesystem::path& path);

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.dimension_ == b.dimension_ && a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  void check_schema(const std::string& label, const PropertyMap& properties) const;
  void check_vectors(const PropertyMap& properties) const;
  std::size_t index_of(NodeId id) const;
  void insert_node(Node node);
  void insert_edge(Edge edge);

  std::size_t dimension_;
  std::uint64_t next_node_id_ = 1;
  std::uint64_t next_edge_id_ = 1;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<std::uint64_t, std::size_t> node_slot_;
  std::unordered_map<std::int64_t, std::size_t> article_index_;
  std::unordered_map<std::int64_t, std::size_t> topic_index_;
  // Per node slot, indices into edges_.
  std::vector<std::vector<std::size_t>> out_edges_;
  std::vector<std::vector<std::size_t>> in_edges_;
};

/// Readers-writer wrapper: many concurrent readers or one writer.
class SharedGraph {
 public:
  explicit SharedGraph(Graph graph) : graph_(std::move(graph)) {}

  class ReadView {
   public:
    ReadView(const Graph& g, std::shared_mutex& m) : lock_(m), graph_(&g) {}
    const Graph& operator*() const { return *graph_; }
    const Graph* operator->() const { return graph_; }

   private:
    std::shared_lock<std::shared_mutex> lock_;
    const Graph* graph_;
  };

  class WriteView {
   public:
    WriteView(Graph& g, std::shared_mutex& m) : lock_(m), graph_(&g) {}
    Graph& operator*() const { return *graph_; }
    Graph* operator->() const { return graph_; }

   private:
    std::unique_lock<std::shared_mutex> lock_;
    Graph* graph_;
  };

  ReadView read() const { return ReadView(graph_, mutex_); }
  WriteView write() { return WriteView(graph_, mutex_); }

 private:
  Graph graph_;
  mutable std::shared_mutex mutex_;
};

}  // namespace kgchat
