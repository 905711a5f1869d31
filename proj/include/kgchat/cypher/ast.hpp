#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgchat/property_value.hpp"

namespace kgchat::cypher {

enum class CompareOp { Eq, Ne, Lt, Gt, Le, Ge };

std::string_view to_string(CompareOp op);

/// Expression tree. Children live in `args`:
///   Compare      -> [lhs, rhs]
///   FunctionCall -> call arguments
///   And / Or     -> [lhs, rhs]
///   Not          -> [operand]
/// `offset` records the source position and is ignored by equality.
struct Expr {
  enum class Kind { Literal, PropertyAccess, VariableRef, Compare, FunctionCall, And, Or, Not };

  Kind kind = Kind::Literal;
  PropertyValue literal;
  std::string variable;  // PropertyAccess, VariableRef
  std::string name;      // PropertyAccess: property; FunctionCall: dotted function name
  CompareOp op = CompareOp::Eq;
  std::vector<Expr> args;
  std::size_t offset = 0;

  static Expr make_literal(PropertyValue v, std::size_t offset = 0);
  static Expr make_property(std::string var, std::string prop, std::size_t offset = 0);
  static Expr make_variable(std::string var, std::size_t offset = 0);
  static Expr make_compare(CompareOp op, Expr lhs, Expr rhs, std::size_t offset = 0);
  static Expr make_call(std::string fn, std::vector<Expr> args, std::size_t offset = 0);
  static Expr make_and(Expr lhs, Expr rhs, std::size_t offset = 0);
  static Expr make_or(Expr lhs, Expr rhs, std::size_t offset = 0);
  static Expr make_not(Expr operand, std::size_t offset = 0);

  friend bool operator==(const Expr& a, const Expr& b) {
    return a.kind == b.kind && a.literal == b.literal && a.variable == b.variable && a.name == b.name &&
           a.op == b.op && a.args == b.args;
  }
};

struct NodePattern {
  std::string variable;  // empty for anonymous nodes
  std::optional<std::string> label;
  std::vector<std::pair<std::string, PropertyValue>> properties;
  std::size_t offset = 0;

  friend bool operator==(const NodePattern& a, const NodePattern& b) {
    return a.variable == b.variable && a.label == b.label && a.properties == b.properties;
  }
};

/// Relationship step. Right is `-[:KIND]->`, Left is `<-[:KIND]-`.
struct RelPattern {
  enum class Direction { Right, Left };
  std::string kind;
  Direction direction = Direction::Right;
  std::size_t offset = 0;

  friend bool operator==(const RelPattern& a, const RelPattern& b) {
    return a.kind == b.kind && a.direction == b.direction;
  }
};

/// One comma-separated MATCH element: a node followed by zero or more hops.
struct PatternPart {
  NodePattern start;
  std::vector<std::pair<RelPattern, NodePattern>> hops;

  friend bool operator==(const PatternPart&, const PatternPart&) = default;
};

struct Projection {
  Expr expr;
  std::optional<std::string> alias;

  /// Output name: the alias, or the canonical text of the expression.
  std::string column_name() const;

  friend bool operator==(const Projection&, const Projection&) = default;
};

struct WithClause {
  std::vector<Projection> items;
  std::optional<Expr> where;

  friend bool operator==(const WithClause&, const WithClause&) = default;
};

struct SortItem {
  Expr expr;
  bool descending = false;

  friend bool operator==(const SortItem&, const SortItem&) = default;
};

/// MATCH ... [WHERE] (WITH ... [WHERE])* RETURN ... [ORDER BY] [LIMIT]
struct QueryAst {
  std::vector<PatternPart> match;
  std::optional<Expr> where;
  std::vector<WithClause> with;
  std::vector<Projection> returns;
  std::vector<SortItem> order_by;
  std::optional<std::int64_t> limit;
  std::size_t limit_offset = 0;

  friend bool operator==(const QueryAst& a, const QueryAst& b) {
    return a.match == b.match && a.where == b.where && a.with == b.with && a.returns == b.returns &&
           a.order_by == b.order_by && a.limit == b.limit;
  }
};

/// Canonical single-line rendering; parse(unparse(x)) == x.
std::string unparse(const Expr& expr);
std::string unparse(const QueryAst& ast);

/// Calls `fn` on `expr` and every sub-expression, pre-order.
template <typename Fn>
void visit_expr(const Expr& expr, Fn&& fn) {
  fn(expr);
  for (const auto& a : expr.args) visit_expr(a, fn);
}

}  // namespace kgchat::cypher
