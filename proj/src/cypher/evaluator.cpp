#include "kgchat/cypher/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <variant>

#include "kgchat/similarity.hpp"

namespace kgchat::cypher {

std::string_view to_string(EvalError::Kind kind) {
  switch (kind) {
    case EvalError::Kind::TypeMismatch: return "TypeMismatch";
    case EvalError::Kind::Arity: return "Arity";
    case EvalError::Kind::DimensionMismatch: return "DimensionMismatch";
    case EvalError::Kind::UnknownFunction: return "UnknownFunction";
    case EvalError::Kind::UnboundVariable: return "UnboundVariable";
  }
  return "?";
}

namespace {

using Value = std::variant<PropertyValue, const Node*>;
using Row = std::vector<Value>;

const Node* as_node(const Value& v) {
  const auto* p = std::get_if<const Node*>(&v);
  return p ? *p : nullptr;
}

const PropertyValue& as_scalar(const Value& v) { return std::get<PropertyValue>(v); }

bool truthy(const Value& v) {
  const auto* p = std::get_if<PropertyValue>(&v);
  return p && p->is_bool() && p->as_bool();
}

// -1 / 0 / +1, or nullopt when the values are not comparable.
std::optional<int> numeric_compare(const PropertyValue& a, const PropertyValue& b) {
  if (a.is_int() && b.is_int()) return (a.as_int() > b.as_int()) - (a.as_int() < b.as_int());
  const double x = a.as_number();
  const double y = b.as_number();
  if (std::isnan(x) || std::isnan(y)) return std::nullopt;
  return (x > y) - (x < y);
}

bool compare(CompareOp op, const Value& lhs, const Value& rhs) {
  const Node* ln = as_node(lhs);
  const Node* rn = as_node(rhs);
  if (ln || rn) {
    if (ln && rn) {
      if (op == CompareOp::Eq) return ln->id == rn->id;
      if (op == CompareOp::Ne) return ln->id != rn->id;
      throw EvalError(EvalError::Kind::TypeMismatch, "nodes only support = and <>");
    }
    const auto& other = ln ? as_scalar(rhs) : as_scalar(lhs);
    if (other.is_null()) return false;
    return op == CompareOp::Ne;
  }
  const auto& a = as_scalar(lhs);
  const auto& b = as_scalar(rhs);
  if (a.is_null() || b.is_null()) return false;

  std::optional<int> c;
  if (a.is_number() && b.is_number()) {
    c = numeric_compare(a, b);
  } else if (a.is_text() && b.is_text()) {
    c = a.as_text().compare(b.as_text()) < 0 ? -1 : (a.as_text() == b.as_text() ? 0 : 1);
  } else if (a.is_bool() && b.is_bool()) {
    c = static_cast<int>(a.as_bool()) - static_cast<int>(b.as_bool());
  } else if (a.is_vector() && b.is_vector()) {
    if (op == CompareOp::Eq) return a.as_vector() == b.as_vector();
    if (op == CompareOp::Ne) return a.as_vector() != b.as_vector();
    return false;
  } else {
    // Different types: never equal, never ordered.
    return op == CompareOp::Ne;
  }
  if (!c) return op == CompareOp::Ne;
  switch (op) {
    case CompareOp::Eq: return *c == 0;
    case CompareOp::Ne: return *c != 0;
    case CompareOp::Lt: return *c < 0;
    case CompareOp::Gt: return *c > 0;
    case CompareOp::Le: return *c <= 0;
    case CompareOp::Ge: return *c >= 0;
  }
  return false;
}

// Total order used by ORDER BY (ascending): nodes, lists, text, booleans,
// numbers, null.
int type_rank(const Value& v) {
  if (as_node(v)) return 0;
  const auto& p = as_scalar(v);
  if (p.is_vector()) return 1;
  if (p.is_text()) return 2;
  if (p.is_bool()) return 3;
  if (p.is_number()) return 4;
  return 5;
}

int order_compare(const Value& a, const Value& b) {
  const int ra = type_rank(a);
  const int rb = type_rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (ra) {
    case 0: {
      const auto x = as_node(a)->id;
      const auto y = as_node(b)->id;
      return (x > y) - (x < y);
    }
    case 1: {
      const auto& x = as_scalar(a).as_vector();
      const auto& y = as_scalar(b).as_vector();
      for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (x[i] < y[i]) return -1;
        if (x[i] > y[i]) return 1;
      }
      return (x.size() > y.size()) - (x.size() < y.size());
    }
    case 2: {
      const int c = as_scalar(a).as_text().compare(as_scalar(b).as_text());
      return (c > 0) - (c < 0);
    }
    case 3: return static_cast<int>(as_scalar(a).as_bool()) - static_cast<int>(as_scalar(b).as_bool());
    case 4: {
      if (auto c = numeric_compare(as_scalar(a), as_scalar(b))) return *c;
      // NaN sorts above every other number.
      const bool xa = std::isnan(as_scalar(a).as_number());
      const bool xb = std::isnan(as_scalar(b).as_number());
      return static_cast<int>(xa) - static_cast<int>(xb);
    }
    default: return 0;
  }
}

std::pair<std::string, std::int64_t> node_key(const Node& n) {
  const char* key = n.label == kArticleLabel ? "article_id" : "topic_id";
  const PropertyValue* p = n.property(key);
  return {n.label, p && p->is_int() ? p->as_int() : static_cast<std::int64_t>(n.id.value)};
}

/// Names visible to expressions, matched against row positions. Later
/// entries shadow earlier ones.
struct Frame {
  std::vector<std::string> names;

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = names.size(); i-- > 0;) {
      if (names[i] == name) return i;
    }
    return std::nullopt;
  }
};

Value eval(const Expr& e, const Frame& frame, const Row& row);

Value lookup(const std::string& name, const Frame& frame, const Row& row, std::size_t offset) {
  auto slot = frame.find(name);
  if (!slot) throw EvalError(EvalError::Kind::UnboundVariable, "unbound variable '" + name + "' at offset " +
                                                                   std::to_string(offset));
  return row[*slot];
}

Value call(const Expr& e, const Frame& frame, const Row& row) {
  if (e.name != "gds.similarity.cosine") {
    throw EvalError(EvalError::Kind::UnknownFunction, "unknown function '" + e.name + "'");
  }
  if (e.args.size() != 2) {
    throw EvalError(EvalError::Kind::Arity, e.name + " takes 2 arguments, got " + std::to_string(e.args.size()));
  }
  const Value a = eval(e.args[0], frame, row);
  const Value b = eval(e.args[1], frame, row);
  if (as_node(a) || as_node(b)) throw EvalError(EvalError::Kind::TypeMismatch, e.name + " expects vectors, got a node");
  const auto& x = as_scalar(a);
  const auto& y = as_scalar(b);
  if (x.is_null() || y.is_null()) return PropertyValue();
  if (!x.is_vector() || !y.is_vector()) {
    throw EvalError(EvalError::Kind::TypeMismatch, e.name + " expects vectors, got " + std::string(x.type_name()) +
                                                       " and " + std::string(y.type_name()));
  }
  try {
    return PropertyValue(cosine(x.as_vector(), y.as_vector()));
  } catch (const DimensionMismatch& err) {
    throw EvalError(EvalError::Kind::DimensionMismatch, err.what());
  }
}

Value eval(const Expr& e, const Frame& frame, const Row& row) {
  switch (e.kind) {
    case Expr::Kind::Literal: return e.literal;
    case Expr::Kind::VariableRef: return lookup(e.variable, frame, row, e.offset);
    case Expr::Kind::PropertyAccess: {
      const Value v = lookup(e.variable, frame, row, e.offset);
      const Node* n = as_node(v);
      if (!n) throw EvalError(EvalError::Kind::TypeMismatch, "'" + e.variable + "' is not a node");
      const PropertyValue* p = n->property(e.name);
      return p ? *p : PropertyValue();
    }
    case Expr::Kind::FunctionCall: return call(e, frame, row);
    case Expr::Kind::Compare:
      return PropertyValue(compare(e.op, eval(e.args[0], frame, row), eval(e.args[1], frame, row)));
    case Expr::Kind::And:
      return PropertyValue(truthy(eval(e.args[0], frame, row)) && truthy(eval(e.args[1], frame, row)));
    case Expr::Kind::Or:
      return PropertyValue(truthy(eval(e.args[0], frame, row)) || truthy(eval(e.args[1], frame, row)));
    case Expr::Kind::Not: return PropertyValue(!truthy(eval(e.args[0], frame, row)));
  }
  return PropertyValue();
}

bool node_matches(const Node& n, const NodePattern& p) {
  if (p.label && n.label != *p.label) return false;
  for (const auto& [key, literal] : p.properties) {
    const PropertyValue* v = n.property(key);
    if (!v || !compare(CompareOp::Eq, *v, literal)) return false;
  }
  return true;
}

// Finds `var.article_id = <int>` (either side) among the top-level AND
// conjuncts of the MATCH predicate.
std::optional<std::int64_t> indexed_article_id(const std::optional<Expr>& where, const std::string& var) {
  if (!where || var.empty()) return std::nullopt;
  std::vector<const Expr*> stack{&*where};
  while (!stack.empty()) {
    const Expr* e = stack.back();
    stack.pop_back();
    if (e->kind == Expr::Kind::And) {
      stack.push_back(&e->args[0]);
      stack.push_back(&e->args[1]);
      continue;
    }
    if (e->kind != Expr::Kind::Compare || e->op != CompareOp::Eq) continue;
    for (int side = 0; side < 2; ++side) {
      const Expr& prop = e->args[side];
      const Expr& lit = e->args[1 - side];
      if (prop.kind == Expr::Kind::PropertyAccess && prop.variable == var && prop.name == "article_id" &&
          lit.kind == Expr::Kind::Literal && lit.literal.is_int()) {
        return lit.literal.as_int();
      }
    }
  }
  return std::nullopt;
}

class Matcher {
 public:
  Matcher(const QueryAst& ast, const Graph& graph) : ast_(ast), graph_(graph) {
    for (const auto& part : ast.match) {
      add_step(part.start, nullptr, 0);
      std::size_t prev = steps_.back().slot;
      for (const auto& [rel, node] : part.hops) {
        add_step(node, &rel, prev);
        prev = steps_.back().slot;
      }
    }
  }

  const Frame& frame() const { return frame_; }

  /// Named (non-anonymous) slots, in binding order.
  std::vector<std::size_t> named_slots() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < frame_.names.size(); ++i) {
      if (frame_.names[i].front() != '#') out.push_back(i);
    }
    return out;
  }

  std::vector<Row> enumerate() {
    Row row(frame_.names.size(), Value(PropertyValue()));
    std::vector<bool> bound(frame_.names.size(), false);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> used;
    std::vector<Row> out;
    walk(0, row, bound, used, out);
    return out;
  }

 private:
  struct Step {
    const NodePattern* node;
    const RelPattern* rel;  // null for the first node of a pattern part
    std::size_t from_slot;
    std::size_t slot;
    std::optional<std::int64_t> index_key;
  };

  void add_step(const NodePattern& node, const RelPattern* rel, std::size_t from_slot) {
    std::size_t slot;
    if (!node.variable.empty()) {
      if (auto existing = frame_.find(node.variable)) {
        slot = *existing;
      } else {
        slot = frame_.names.size();
        frame_.names.push_back(node.variable);
      }
    } else {
      slot = frame_.names.size();
      frame_.names.push_back("#" + std::to_string(slot));
    }
    Step step{&node, rel, from_slot, slot, std::nullopt};
    if (!rel && (!node.label || *node.label == kArticleLabel)) {
      for (const auto& [key, lit] : node.properties) {
        if (key == "article_id" && lit.is_int()) step.index_key = lit.as_int();
      }
      if (!step.index_key) step.index_key = indexed_article_id(ast_.where, node.variable);
    }
    steps_.push_back(step);
  }

  std::vector<const Node*> candidates(const Step& step) const {
    if (step.index_key) {
      const Node* n = graph_.find_article(*step.index_key);
      return n ? std::vector<const Node*>{n} : std::vector<const Node*>{};
    }
    if (step.node->label) {
      if (*step.node->label != kArticleLabel && *step.node->label != kTopicLabel) return {};
      return graph_.nodes_by_label(*step.node->label);
    }
    std::vector<const Node*> all;
    all.reserve(graph_.nodes().size());
    for (const auto& n : graph_.nodes()) all.push_back(&n);
    return all;
  }

  void walk(std::size_t i, Row& row, std::vector<bool>& bound,
            std::vector<std::pair<std::uint64_t, std::uint64_t>>& used, std::vector<Row>& out) {
    if (i == steps_.size()) {
      out.push_back(row);
      return;
    }
    const Step& step = steps_[i];
    auto try_node = [&](const Node* n, std::optional<std::pair<std::uint64_t, std::uint64_t>> edge) {
      if (!node_matches(*n, *step.node)) return;
      if (edge && std::find(used.begin(), used.end(), *edge) != used.end()) return;
      const bool was_bound = bound[step.slot];
      if (was_bound) {
        if (as_node(row[step.slot]) != n) return;
      } else {
        row[step.slot] = n;
        bound[step.slot] = true;
      }
      if (edge) used.push_back(*edge);
      walk(i + 1, row, bound, used, out);
      if (edge) used.pop_back();
      if (!was_bound) bound[step.slot] = false;
    };

    if (!step.rel) {
      if (bound[step.slot]) {
        try_node(as_node(row[step.slot]), std::nullopt);
      } else {
        for (const Node* n : candidates(step)) try_node(n, std::nullopt);
      }
      return;
    }
    if (step.rel->kind != kHasTopic) return;
    const Node* from = as_node(row[step.from_slot]);
    const bool right = step.rel->direction == RelPattern::Direction::Right;
    for (const Node* n : graph_.neighbors(from->id, kHasTopic, right ? Direction::Out : Direction::In)) {
      auto edge = right ? std::make_pair(from->id.value, n->id.value) : std::make_pair(n->id.value, from->id.value);
      try_node(n, edge);
    }
  }

  const QueryAst& ast_;
  const Graph& graph_;
  Frame frame_;
  std::vector<Step> steps_;
};

struct SortableRow {
  std::vector<PropertyValue> output;
  std::vector<Value> keys;
  std::vector<std::pair<std::string, std::int64_t>> tie;
};

}  // namespace

ResultTable execute(const QueryAst& ast, const Graph& graph, std::int64_t effective_limit) {
  Matcher matcher(ast, graph);
  Frame frame = matcher.frame();
  std::vector<Row> rows = matcher.enumerate();
  std::vector<std::size_t> node_slots = matcher.named_slots();

  auto filter = [&](const std::optional<Expr>& where) {
    if (!where) return;
    std::vector<Row> kept;
    for (auto& r : rows) {
      if (truthy(eval(*where, frame, r))) kept.push_back(std::move(r));
    }
    rows = std::move(kept);
  };
  filter(ast.where);

  for (const auto& with : ast.with) {
    Frame next;
    for (const auto& item : with.items) next.names.push_back(item.alias ? *item.alias : item.expr.variable);
    std::vector<Row> projected;
    projected.reserve(rows.size());
    for (const auto& r : rows) {
      Row out;
      out.reserve(with.items.size());
      for (const auto& item : with.items) out.push_back(eval(item.expr, frame, r));
      projected.push_back(std::move(out));
    }
    frame = std::move(next);
    rows = std::move(projected);
    node_slots.clear();
    for (std::size_t i = 0; i < with.items.size(); ++i) {
      if (with.items[i].expr.kind == Expr::Kind::VariableRef) node_slots.push_back(i);
    }
    filter(with.where);
  }

  ResultTable table;
  for (const auto& p : ast.returns) table.columns.push_back(p.column_name());

  Frame order_frame = frame;
  for (const auto& p : ast.returns) order_frame.names.push_back(p.alias ? *p.alias : "#ret");

  std::vector<SortableRow> sortable;
  sortable.reserve(rows.size());
  for (const auto& r : rows) {
    SortableRow s;
    Row extended = r;
    for (const auto& p : ast.returns) {
      Value v = eval(p.expr, frame, r);
      if (as_node(v)) throw EvalError(EvalError::Kind::TypeMismatch, "cannot return a node as a column");
      s.output.push_back(as_scalar(v));
      extended.push_back(std::move(v));
    }
    for (const auto& o : ast.order_by) s.keys.push_back(eval(o.expr, order_frame, extended));
    for (std::size_t slot : node_slots) {
      if (const Node* n = as_node(r[slot])) s.tie.push_back(node_key(*n));
    }
    sortable.push_back(std::move(s));
  }

  std::stable_sort(sortable.begin(), sortable.end(), [&](const SortableRow& a, const SortableRow& b) {
    for (std::size_t i = 0; i < ast.order_by.size(); ++i) {
      int c = order_compare(a.keys[i], b.keys[i]);
      if (ast.order_by[i].descending) c = -c;
      if (c != 0) return c < 0;
    }
    return a.tie < b.tie;
  });

  const auto limit = static_cast<std::size_t>(std::max<std::int64_t>(effective_limit, 0));
  table.truncated = sortable.size() > limit;
  if (table.truncated) sortable.resize(limit);
  table.rows.reserve(sortable.size());
  for (auto& s : sortable) table.rows.push_back(std::move(s.output));
  return table;
}

QueryRun run_query(std::string_view text, const Graph& graph, const CvlPolicy& policy) {
  auto screened = screen(text, policy);
  QueryRun run{std::move(screened.report), std::move(screened.ast), std::nullopt};
  if (run.report.accepted()) run.table = execute(*run.ast, graph, run.report.effective_limit);
  return run;
}

std::string format_table(const ResultTable& table) {
  std::vector<std::size_t> width(table.columns.size());
  std::vector<std::vector<std::string>> cells;
  for (std::size_t c = 0; c < table.columns.size(); ++c) width[c] = table.columns[c].size();
  for (const auto& row : table.rows) {
    auto& line = cells.emplace_back();
    for (std::size_t c = 0; c < row.size(); ++c) {
      line.push_back(row[c].to_display());
      width[c] = std::max(width[c], line.back().size());
    }
  }
  auto emit = [&](std::string& out, const std::vector<std::string>& line) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c) out += "  ";
      out += line[c];
      if (c + 1 < line.size()) out.append(width[c] - line[c].size(), ' ');
    }
    out += '\n';
  };
  std::string out;
  emit(out, table.columns);
  std::vector<std::string> rule;
  for (auto w : width) rule.emplace_back(w, '-');
  emit(out, rule);
  for (const auto& line : cells) emit(out, line);
  return out;
}

void to_json(nlohmann::json& j, const ResultTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json jr = nlohmann::json::array();
    for (const auto& cell : row) jr.push_back(cell);
    rows.push_back(std::move(jr));
  }
  j = {{"columns", t.columns}, {"rows", std::move(rows)}, {"truncated", t.truncated}};
}

}  // namespace kgchat::cypher
