#include "kgchat/cypher/validator.hpp"

#include <algorithm>

#include "kgchat/cypher/lexer.hpp"
#include "kgchat/cypher/parser.hpp"

namespace kgchat::cypher {

std::string_view to_string(Verdict v) { return v == Verdict::Accepted ? "Accepted" : "Rejected"; }

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.code == code; });
}

namespace {

struct Binding {
  bool is_node = true;
  std::optional<std::string> label;
};

using Scope = std::map<std::string, Binding, std::less<>>;

class Checker {
 public:
  Checker(const CvlPolicy& policy, ValidationReport& report) : policy_(policy), report_(report) {}

  void run(const QueryAst& ast) {
    Scope scope;
    std::size_t node_patterns = 0;
    for (const auto& part : ast.match) {
      node_patterns += 1 + part.hops.size();
      bind_node(part.start, scope);
      for (const auto& [rel, node] : part.hops) {
        if (!policy_.relationship_kinds.contains(rel.kind)) {
          add("UNKNOWN_RELATIONSHIP", "relationship type '" + rel.kind + "' is not allowed", rel.offset);
        }
        bind_node(node, scope);
      }
    }
    if (node_patterns > policy_.max_node_patterns) {
      add("PATTERN_TOO_LARGE",
          std::to_string(node_patterns) + " node patterns exceed the maximum of " +
              std::to_string(policy_.max_node_patterns),
          0);
    }
    if (ast.where) check(*ast.where, scope);

    for (const auto& with : ast.with) {
      Scope next;
      for (const auto& item : with.items) {
        check(item.expr, scope);
        const std::string name = item.alias ? *item.alias : item.expr.variable;
        Binding b{false, std::nullopt};
        if (item.expr.kind == Expr::Kind::VariableRef) {
          if (auto it = scope.find(item.expr.variable); it != scope.end()) b = it->second;
        }
        if (!next.emplace(name, b).second) add("DUPLICATE_ALIAS", "'" + name + "' is projected twice", item.expr.offset);
      }
      scope = std::move(next);
      if (with.where) check(*with.where, scope);
    }

    Scope order_scope = scope;
    for (const auto& item : ast.returns) {
      check(item.expr, scope);
      if (item.expr.kind == Expr::Kind::VariableRef) {
        auto it = scope.find(item.expr.variable);
        if (it != scope.end() && it->second.is_node) {
          add("NODE_PROJECTION", "RETURN must project properties or values, not node '" + item.expr.variable + "'",
              item.expr.offset);
        }
      }
      if (item.alias) order_scope.insert_or_assign(*item.alias, Binding{false, std::nullopt});
    }
    for (const auto& s : ast.order_by) check(s.expr, order_scope);

    if (ast.limit) {
      if (*ast.limit < 1) {
        add("LIMIT_INVALID", "LIMIT must be at least 1", ast.limit_offset);
        report_.effective_limit = 1;
      } else if (*ast.limit > policy_.max_limit) {
        add("LIMIT_EXCEEDED",
            "LIMIT " + std::to_string(*ast.limit) + " exceeds the maximum of " + std::to_string(policy_.max_limit),
            ast.limit_offset);
        report_.effective_limit = policy_.max_limit;
      } else {
        report_.effective_limit = *ast.limit;
      }
    } else {
      report_.effective_limit = policy_.max_limit;
      report_.limit_injected = true;
    }
  }

 private:
  void add(std::string code, std::string message, std::size_t offset) {
    report_.violations.push_back({std::move(code), std::move(message), offset});
  }

  bool property_allowed(const std::optional<std::string>& label, const std::string& prop) const {
    if (label) {
      auto it = policy_.properties.find(*label);
      return it != policy_.properties.end() && it->second.contains(prop);
    }
    for (const auto& l : policy_.labels) {
      auto it = policy_.properties.find(l);
      if (it != policy_.properties.end() && it->second.contains(prop)) return true;
    }
    return false;
  }

  void count_literal(const PropertyValue& v, std::size_t offset) {
    if (++literal_count_ == policy_.max_literals + 1) {
      add("TOO_MANY_LITERALS", "more than " + std::to_string(policy_.max_literals) + " literals", offset);
    }
    if (v.is_text() && v.as_text().size() > policy_.max_text_literal_bytes) {
      add("LITERAL_TOO_LARGE", "text literal longer than " + std::to_string(policy_.max_text_literal_bytes) + " bytes",
          offset);
    }
    if (v.is_vector() && v.as_vector().size() > policy_.max_vector_literal_length) {
      add("LITERAL_TOO_LARGE",
          "list literal longer than " + std::to_string(policy_.max_vector_literal_length) + " entries", offset);
    }
  }

  void bind_node(const NodePattern& n, Scope& scope) {
    if (n.label && !policy_.labels.contains(*n.label)) {
      add("UNKNOWN_LABEL", "label '" + *n.label + "' is not allowed", n.offset);
    } else if (!n.label && policy_.require_labels) {
      add("UNLABELED_NODE", "node patterns must carry a label", n.offset);
    }
    std::optional<std::string> label = n.label;
    if (!n.variable.empty()) {
      auto it = scope.find(n.variable);
      if (it != scope.end() && !label) label = it->second.label;
    }
    for (const auto& [key, value] : n.properties) {
      if (!property_allowed(label, key)) add("UNKNOWN_PROPERTY", "property '" + key + "' is not allowed", n.offset);
      count_literal(value, n.offset);
    }
    if (n.variable.empty()) return;
    auto [it, inserted] = scope.emplace(n.variable, Binding{true, n.label});
    if (!inserted && !it->second.label) it->second.label = n.label;
  }

  void check(const Expr& e, const Scope& scope) {
    switch (e.kind) {
      case Expr::Kind::Literal: count_literal(e.literal, e.offset); break;
      case Expr::Kind::VariableRef:
        if (!scope.contains(e.variable)) add("UNBOUND_VARIABLE", "variable '" + e.variable + "' is not bound", e.offset);
        break;
      case Expr::Kind::PropertyAccess: {
        auto it = scope.find(e.variable);
        if (it == scope.end()) {
          add("UNBOUND_VARIABLE", "variable '" + e.variable + "' is not bound", e.offset);
        } else if (!it->second.is_node) {
          add("PROPERTY_ON_VALUE", "'" + e.variable + "' is a value, not a node", e.offset);
        } else if (!property_allowed(it->second.label, e.name)) {
          add("UNKNOWN_PROPERTY", "property '" + e.name + "' is not allowed", e.offset);
        }
        break;
      }
      case Expr::Kind::FunctionCall: {
        auto it = policy_.functions.find(e.name);
        if (it == policy_.functions.end()) {
          add("UNKNOWN_FUNCTION", "function '" + e.name + "' is not allowed", e.offset);
        } else if (it->second != e.args.size()) {
          add("BAD_ARITY",
              e.name + " takes " + std::to_string(it->second) + " arguments, got " + std::to_string(e.args.size()),
              e.offset);
        }
        break;
      }
      default: break;
    }
    for (const auto& a : e.args) check(a, scope);
  }

  const CvlPolicy& policy_;
  ValidationReport& report_;
  std::size_t literal_count_ = 0;
};

ValidationReport rejected(const CvlPolicy& policy, std::vector<Violation> violations) {
  ValidationReport r;
  r.verdict = Verdict::Rejected;
  r.violations = std::move(violations);
  r.effective_limit = policy.max_limit;
  return r;
}

}  // namespace

ValidationReport validate(const QueryAst& ast, const CvlPolicy& policy) {
  ValidationReport report;
  Checker(policy, report).run(ast);
  report.verdict = report.violations.empty() ? Verdict::Accepted : Verdict::Rejected;
  return report;
}

ScreenedQuery screen(std::string_view text, const CvlPolicy& policy) {
  if (text.size() > policy.max_query_bytes) {
    return {rejected(policy, {{"QUERY_TOO_LONG",
                               "query is " + std::to_string(text.size()) + " bytes, maximum is " +
                                   std::to_string(policy.max_query_bytes),
                               0}}),
            std::nullopt};
  }
  std::vector<Token> tokens;
  try {
    tokens = tokenize(text);
  } catch (const LexError& e) {
    return {rejected(policy, {{"LEX_ERROR", e.what(), e.offset()}}), std::nullopt};
  }
  std::vector<Violation> writes;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::Keyword && is_write_keyword(t.keyword())) {
      writes.push_back({"WRITE_CLAUSE", "keyword " + t.keyword() + " is not allowed in read-only queries", t.offset});
    }
  }
  if (!writes.empty()) return {rejected(policy, std::move(writes)), std::nullopt};
  QueryAst ast;
  try {
    ast = parse(tokens);
  } catch (const ParseError& e) {
    return {rejected(policy, {{"PARSE_ERROR", e.what(), e.offset()}}), std::nullopt};
  }
  auto report = validate(ast, policy);
  return {std::move(report), std::move(ast)};
}

void to_json(nlohmann::json& j, const Violation& v) {
  j = {{"code", v.code}, {"message", v.message}, {"offset", v.offset}};
}

void to_json(nlohmann::json& j, const ValidationReport& r) {
  j = {{"verdict", to_string(r.verdict)},
       {"violations", r.violations},
       {"effective_limit", r.effective_limit},
       {"limit_injected", r.limit_injected}};
}

}  // namespace kgchat::cypher
