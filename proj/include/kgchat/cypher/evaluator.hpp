#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kgchat/cypher/ast.hpp"
#include "kgchat/cypher/validator.hpp"
#include "kgchat/graph_store.hpp"

namespace kgchat::cypher {

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<PropertyValue>> rows;
  /// More rows matched than the effective limit allowed.
  bool truncated = false;

  friend bool operator==(const ResultTable& a, const ResultTable& b) {
    return a.columns == b.columns && a.rows == b.rows;
  }
};

class EvalError : public std::runtime_error {
 public:
  enum class Kind { TypeMismatch, Arity, DimensionMismatch, UnknownFunction, UnboundVariable };

  EvalError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(EvalError::Kind kind);

/// Runs an accepted query against the graph.
///
/// Bindings are enumerated pattern by pattern (relationships are not reused
/// within one MATCH), filtered by WHERE, threaded through WITH stages and
/// projected by RETURN. Rows are sorted by ORDER BY, then by the keys
/// (article_id / topic_id) of the node variables still in scope, in binding
/// order, and finally truncated to `effective_limit`.
///
/// Missing properties read as Null; any comparison involving Null is false.
ResultTable execute(const QueryAst& ast, const Graph& graph, std::int64_t effective_limit);

struct QueryRun {
  ValidationReport report;
  std::optional<QueryAst> ast;
  std::optional<ResultTable> table;  // present iff the report is Accepted
};

/// screen() followed by execute() when accepted. EvalError propagates.
QueryRun run_query(std::string_view text, const Graph& graph, const CvlPolicy& policy);

/// Column-aligned plain-text rendering with a header row.
std::string format_table(const ResultTable& table);

void to_json(nlohmann::json& j, const ResultTable& t);

}  // namespace kgchat::cypher
