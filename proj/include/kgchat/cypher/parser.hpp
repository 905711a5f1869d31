#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "kgchat/cypher/ast.hpp"
#include "kgchat/cypher/lexer.hpp"

namespace kgchat::cypher {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string expected, std::string found, std::size_t offset);

  const std::string& expected() const { return expected_; }
  const std::string& found() const { return found_; }
  std::size_t offset() const { return offset_; }

 private:
  std::string expected_;
  std::string found_;
  std::size_t offset_;
};

/// Recursive-descent parser for the read-only query subset:
///
///   query    := MATCH pattern (',' pattern)* (MATCH ...)* [WHERE expr]
///               (WITH items [WHERE expr])* RETURN items
///               [ORDER BY expr [ASC|DESC] (',' ...)*] [LIMIT int]
///   pattern  := node (rel node)*
///   node     := '(' [ident] [':' ident] ['{' ident ':' literal, ... '}'] ')'
///   rel      := '-[' ':' ident ']->' | '<-[' ':' ident ']-'
///   expr     := or ; or := and (OR and)* ; and := not (AND not)*
///   not      := NOT not | cmp ; cmp := atom [op atom]
///   atom     := literal | ident | ident '.' ident | name '(' args ')' | '(' expr ')'
QueryAst parse(std::span<const Token> tokens);

/// tokenize + parse.
QueryAst parse_query(std::string_view text);

}  // namespace kgchat::cypher
