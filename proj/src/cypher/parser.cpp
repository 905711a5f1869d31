#include "kgchat/cypher/parser.hpp"

#include <charconv>
#include <limits>

namespace kgchat::cypher {

ParseError::ParseError(std::string expected, std::string found, std::size_t offset)
    : std::runtime_error("expected " + expected + " but found " + found + " at offset " + std::to_string(offset)),
      expected_(std::move(expected)),
      found_(std::move(found)),
      offset_(offset) {}

namespace {

class Parser {
 public:
  explicit Parser(std::span<const Token> tokens) : tokens_(tokens) {}

  QueryAst query() {
    QueryAst ast;
    expect_keyword("MATCH");
    pattern_list(ast);
    while (at_keyword("MATCH")) {
      ++pos_;
      pattern_list(ast);
    }
    if (accept_keyword("WHERE")) ast.where = expr();
    while (accept_keyword("WITH")) {
      WithClause w;
      w.items = projections(/*require_alias_for_expressions=*/true);
      if (accept_keyword("WHERE")) w.where = expr();
      ast.with.push_back(std::move(w));
    }
    expect_keyword("RETURN");
    ast.returns = projections(false);
    if (accept_keyword("ORDER")) {
      expect_keyword("BY");
      do {
        SortItem item{expr(), false};
        if (accept_keyword("DESC") || accept_keyword("DESCENDING")) {
          item.descending = true;
        } else if (!accept_keyword("ASC")) {
          accept_keyword("ASCENDING");
        }
        ast.order_by.push_back(std::move(item));
      } while (accept_symbol(","));
    }
    if (at_keyword("LIMIT")) {
      ast.limit_offset = peek().offset;
      ++pos_;
      const Token& t = peek();
      if (t.kind != TokenKind::Integer) fail("integer after LIMIT");
      ast.limit = parse_int(t, false);
      ++pos_;
    }
    if (!at_end()) fail("end of query");
    return ast;
  }

 private:
  bool at_end() const { return pos_ >= tokens_.size(); }

  const Token& peek() const {
    static const Token kEnd{TokenKind::Symbol, "", 0};
    return at_end() ? kEnd : tokens_[pos_];
  }

  std::size_t end_offset() const {
    if (tokens_.empty()) return 0;
    const Token& last = tokens_.back();
    return last.offset + last.text.size();
  }

  [[noreturn]] void fail(const std::string& expected) const {
    if (at_end()) throw ParseError(expected, "end of input", end_offset());
    const Token& t = peek();
    throw ParseError(expected, "'" + t.text + "'", t.offset);
  }

  bool at_keyword(std::string_view kw) const { return !at_end() && peek().is_keyword(kw); }
  bool at_symbol(std::string_view s) const { return !at_end() && peek().is_symbol(s); }

  bool accept_keyword(std::string_view kw) {
    if (!at_keyword(kw)) return false;
    ++pos_;
    return true;
  }

  bool accept_symbol(std::string_view s) {
    if (!at_symbol(s)) return false;
    ++pos_;
    return true;
  }

  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) fail(std::string(kw));
  }

  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s)) fail("'" + std::string(s) + "'");
  }

  std::string identifier(const char* what) {
    if (at_end() || peek().kind != TokenKind::Identifier) fail(what);
    return tokens_[pos_++].text;
  }

  std::int64_t parse_int(const Token& t, bool negative) const {
    std::uint64_t magnitude = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), magnitude);
    const std::uint64_t cap = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()) + (negative ? 1 : 0);
    if (ec != std::errc() || magnitude > cap) throw ParseError("64-bit integer", "'" + t.text + "'", t.offset);
    if (negative) return magnitude == cap ? std::numeric_limits<std::int64_t>::min() : -static_cast<std::int64_t>(magnitude);
    return static_cast<std::int64_t>(magnitude);
  }

  double parse_float(const Token& t) const {
    double v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc()) throw ParseError("finite float", "'" + t.text + "'", t.offset);
    return v;
  }

  // Numeric literal with optional leading '-'.
  PropertyValue number() {
    const bool negative = accept_symbol("-");
    const Token& t = peek();
    if (t.kind == TokenKind::Integer && !at_end()) {
      ++pos_;
      return parse_int(t, negative);
    }
    if (t.kind == TokenKind::Float && !at_end()) {
      ++pos_;
      const double v = parse_float(t);
      return negative ? -v : v;
    }
    fail("number");
  }

  PropertyValue literal() {
    const Token& t = peek();
    if (at_end()) fail("literal");
    if (t.kind == TokenKind::Text) {
      ++pos_;
      return unquote(t);
    }
    if (t.is_keyword("TRUE")) {
      ++pos_;
      return true;
    }
    if (t.is_keyword("FALSE")) {
      ++pos_;
      return false;
    }
    if (t.is_keyword("NULL")) {
      ++pos_;
      return {};
    }
    if (t.is_symbol("[")) {
      ++pos_;
      FloatVector v;
      if (!accept_symbol("]")) {
        do {
          v.push_back(number().as_number());
        } while (accept_symbol(","));
        expect_symbol("]");
      }
      return v;
    }
    return number();
  }

  bool at_literal_start() const {
    if (at_end()) return false;
    const Token& t = peek();
    return t.kind == TokenKind::Integer || t.kind == TokenKind::Float || t.kind == TokenKind::Text ||
           t.is_keyword("TRUE") || t.is_keyword("FALSE") || t.is_keyword("NULL") || t.is_symbol("[") ||
           t.is_symbol("-");
  }

  NodePattern node_pattern() {
    NodePattern n;
    n.offset = peek().offset;
    expect_symbol("(");
    if (!at_end() && peek().kind == TokenKind::Identifier) n.variable = tokens_[pos_++].text;
    if (accept_symbol(":")) n.label = identifier("label");
    if (accept_symbol("{")) {
      if (!accept_symbol("}")) {
        do {
          std::string key = identifier("property name");
          expect_symbol(":");
          n.properties.emplace_back(std::move(key), literal());
        } while (accept_symbol(","));
        expect_symbol("}");
      }
    }
    expect_symbol(")");
    return n;
  }

  PatternPart pattern_part() {
    PatternPart part{node_pattern(), {}};
    while (at_symbol("-") || at_symbol("<")) {
      RelPattern rel;
      rel.offset = peek().offset;
      if (accept_symbol("<")) {
        rel.direction = RelPattern::Direction::Left;
        expect_symbol("-");
      } else {
        expect_symbol("-");
      }
      expect_symbol("[");
      expect_symbol(":");
      rel.kind = identifier("relationship type");
      expect_symbol("]");
      expect_symbol("-");
      if (rel.direction == RelPattern::Direction::Right) expect_symbol(">");
      part.hops.emplace_back(std::move(rel), node_pattern());
    }
    return part;
  }

  void pattern_list(QueryAst& ast) {
    do {
      ast.match.push_back(pattern_part());
    } while (accept_symbol(","));
  }

  std::vector<Projection> projections(bool require_alias_for_expressions) {
    std::vector<Projection> items;
    do {
      const std::size_t at = peek().offset;
      Projection p{expr(), std::nullopt};
      if (accept_keyword("AS")) {
        p.alias = identifier("alias");
      } else if (require_alias_for_expressions && p.expr.kind != Expr::Kind::VariableRef) {
        throw ParseError("AS alias for WITH expression", "'" + unparse(p.expr) + "'", at);
      }
      items.push_back(std::move(p));
    } while (accept_symbol(","));
    return items;
  }

  Expr expr() { return or_expr(); }

  Expr or_expr() {
    Expr lhs = and_expr();
    while (at_keyword("OR")) {
      const std::size_t at = peek().offset;
      ++pos_;
      lhs = Expr::make_or(std::move(lhs), and_expr(), at);
    }
    return lhs;
  }

  Expr and_expr() {
    Expr lhs = not_expr();
    while (at_keyword("AND")) {
      const std::size_t at = peek().offset;
      ++pos_;
      lhs = Expr::make_and(std::move(lhs), not_expr(), at);
    }
    return lhs;
  }

  Expr not_expr() {
    if (at_keyword("NOT")) {
      const std::size_t at = peek().offset;
      ++pos_;
      return Expr::make_not(not_expr(), at);
    }
    return compare_expr();
  }

  std::optional<CompareOp> compare_op() {
    static constexpr std::pair<std::string_view, CompareOp> kOps[] = {
        {"=", CompareOp::Eq}, {"<>", CompareOp::Ne}, {"<", CompareOp::Lt},
        {">", CompareOp::Gt}, {"<=", CompareOp::Le}, {">=", CompareOp::Ge},
    };
    for (const auto& [sym, op] : kOps) {
      if (accept_symbol(sym)) return op;
    }
    return std::nullopt;
  }

  Expr compare_expr() {
    Expr lhs = atom();
    const std::size_t at = peek().offset;
    if (auto op = compare_op()) return Expr::make_compare(*op, std::move(lhs), atom(), at);
    return lhs;
  }

  Expr atom() {
    const std::size_t at = peek().offset;
    if (accept_symbol("(")) {
      Expr inner = expr();
      expect_symbol(")");
      return inner;
    }
    if (at_literal_start()) return Expr::make_literal(literal(), at);
    if (at_end() || peek().kind != TokenKind::Identifier) fail("expression");
    std::string first = tokens_[pos_++].text;
    std::vector<std::string> path{first};
    while (at_symbol(".")) {
      ++pos_;
      path.push_back(identifier("name after '.'"));
    }
    if (accept_symbol("(")) {
      std::string name = path[0];
      for (std::size_t i = 1; i < path.size(); ++i) name += "." + path[i];
      std::vector<Expr> args;
      if (!accept_symbol(")")) {
        do {
          args.push_back(expr());
        } while (accept_symbol(","));
        expect_symbol(")");
      }
      return Expr::make_call(std::move(name), std::move(args), at);
    }
    if (path.size() == 1) return Expr::make_variable(std::move(first), at);
    if (path.size() == 2) return Expr::make_property(std::move(path[0]), std::move(path[1]), at);
    throw ParseError("variable.property", "nested property access", at);
  }

  std::span<const Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

QueryAst parse(std::span<const Token> tokens) { return Parser(tokens).query(); }

QueryAst parse_query(std::string_view text) {
  const auto tokens = tokenize(text);
  return parse(tokens);
}

}  // namespace kgchat::cypher
