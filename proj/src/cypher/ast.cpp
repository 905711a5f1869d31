#include "kgchat/cypher/ast.hpp"

namespace kgchat::cypher {

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "<>";
    case CompareOp::Lt: return "<";
    case CompareOp::Gt: return ">";
    case CompareOp::Le: return "<=";
    case CompareOp::Ge: return ">=";
  }
  return "?";
}

Expr Expr::make_literal(PropertyValue v, std::size_t offset) {
  Expr e;
  e.kind = Kind::Literal;
  e.literal = std::move(v);
  e.offset = offset;
  return e;
}

Expr Expr::make_property(std::string var, std::string prop, std::size_t offset) {
  Expr e;
  e.kind = Kind::PropertyAccess;
  e.variable = std::move(var);
  e.name = std::move(prop);
  e.offset = offset;
  return e;
}

Expr Expr::make_variable(std::string var, std::size_t offset) {
  Expr e;
  e.kind = Kind::VariableRef;
  e.variable = std::move(var);
  e.offset = offset;
  return e;
}

Expr Expr::make_compare(CompareOp op, Expr lhs, Expr rhs, std::size_t offset) {
  Expr e;
  e.kind = Kind::Compare;
  e.op = op;
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  e.offset = offset;
  return e;
}

Expr Expr::make_call(std::string fn, std::vector<Expr> args, std::size_t offset) {
  Expr e;
  e.kind = Kind::FunctionCall;
  e.name = std::move(fn);
  e.args = std::move(args);
  e.offset = offset;
  return e;
}

Expr Expr::make_and(Expr lhs, Expr rhs, std::size_t offset) {
  Expr e;
  e.kind = Kind::And;
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  e.offset = offset;
  return e;
}

Expr Expr::make_or(Expr lhs, Expr rhs, std::size_t offset) {
  Expr e;
  e.kind = Kind::Or;
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  e.offset = offset;
  return e;
}

Expr Expr::make_not(Expr operand, std::size_t offset) {
  Expr e;
  e.kind = Kind::Not;
  e.args.push_back(std::move(operand));
  e.offset = offset;
  return e;
}

namespace {

int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Or: return 1;
    case Expr::Kind::And: return 2;
    case Expr::Kind::Not: return 3;
    case Expr::Kind::Compare: return 4;
    default: return 5;
  }
}

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "'";
}

std::string literal_text(const PropertyValue& v) {
  if (v.is_null()) return "null";
  if (v.is_bool()) return v.as_bool() ? "true" : "false";
  if (v.is_text()) return quote(v.as_text());
  return v.to_display();
}

void write(std::string& out, const Expr& e);

void write_operand(std::string& out, const Expr& child, bool parens) {
  if (parens) out += '(';
  write(out, child);
  if (parens) out += ')';
}

void write(std::string& out, const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Literal: out += literal_text(e.literal); return;
    case Expr::Kind::PropertyAccess: out += e.variable + "." + e.name; return;
    case Expr::Kind::VariableRef: out += e.variable; return;
    case Expr::Kind::FunctionCall:
      out += e.name + "(";
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) out += ", ";
        write(out, e.args[i]);
      }
      out += ")";
      return;
    case Expr::Kind::Compare:
      write_operand(out, e.args[0], precedence(e.args[0]) < 5);
      out += " ";
      out += to_string(e.op);
      out += " ";
      write_operand(out, e.args[1], precedence(e.args[1]) < 5);
      return;
    case Expr::Kind::Not:
      out += "NOT ";
      write_operand(out, e.args[0], precedence(e.args[0]) < 3);
      return;
    case Expr::Kind::And:
    case Expr::Kind::Or: {
      const int p = precedence(e);
      write_operand(out, e.args[0], precedence(e.args[0]) < p);
      out += e.kind == Expr::Kind::And ? " AND " : " OR ";
      write_operand(out, e.args[1], precedence(e.args[1]) <= p);
      return;
    }
  }
}

void write(std::string& out, const NodePattern& n) {
  out += "(" + n.variable;
  if (n.label) out += ":" + *n.label;
  if (!n.properties.empty()) {
    if (!n.variable.empty() || n.label) out += " ";
    out += "{";
    for (std::size_t i = 0; i < n.properties.size(); ++i) {
      if (i) out += ", ";
      out += n.properties[i].first + ": " + literal_text(n.properties[i].second);
    }
    out += "}";
  }
  out += ")";
}

void write_projections(std::string& out, const std::vector<Projection>& items) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    write(out, items[i].expr);
    if (items[i].alias) out += " AS " + *items[i].alias;
  }
}

}  // namespace

std::string Projection::column_name() const { return alias ? *alias : unparse(expr); }

std::string unparse(const Expr& expr) {
  std::string out;
  write(out, expr);
  return out;
}

std::string unparse(const QueryAst& ast) {
  std::string out = "MATCH ";
  for (std::size_t i = 0; i < ast.match.size(); ++i) {
    if (i) out += ", ";
    const auto& part = ast.match[i];
    write(out, part.start);
    for (const auto& [rel, node] : part.hops) {
      out += rel.direction == RelPattern::Direction::Right ? "-[:" + rel.kind + "]->" : "<-[:" + rel.kind + "]-";
      write(out, node);
    }
  }
  if (ast.where) {
    out += " WHERE ";
    write(out, *ast.where);
  }
  for (const auto& w : ast.with) {
    out += " WITH ";
    write_projections(out, w.items);
    if (w.where) {
      out += " WHERE ";
      write(out, *w.where);
    }
  }
  out += " RETURN ";
  write_projections(out, ast.returns);
  if (!ast.order_by.empty()) {
    out += " ORDER BY ";
    for (std::size_t i = 0; i < ast.order_by.size(); ++i) {
      if (i) out += ", ";
      write(out, ast.order_by[i].expr);
      if (ast.order_by[i].descending) out += " DESC";
    }
  }
  if (ast.limit) out += " LIMIT " + std::to_string(*ast.limit);
  return out;
}

}  // namespace kgchat::cypher
