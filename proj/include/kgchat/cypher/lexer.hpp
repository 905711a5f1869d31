#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kgchat::cypher {

enum class TokenKind { Keyword, Identifier, Integer, Float, Text, Symbol };

std::string_view to_string(TokenKind kind);

/// `text` is the exact source slice (string literals keep their quotes,
/// keywords keep their original case). `offset` is the byte position.
struct Token {
  TokenKind kind;
  std::string text;
  std::size_t offset;

  /// Uppercased keyword text; only meaningful for Keyword tokens.
  std::string keyword() const;
  bool is_keyword(std::string_view upper) const;
  bool is_symbol(std::string_view sym) const { return kind == TokenKind::Symbol && text == sym; }

  friend bool operator==(const Token&, const Token&) = default;
};

class LexError : public std::runtime_error {
 public:
  LexError(std::size_t offset, const std::string& what) : std::runtime_error(what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Splits query text into tokens. Keywords are recognized case-insensitively;
/// identifiers are case-sensitive. Throws LexError at the first character
/// outside the accepted alphabet.
std::vector<Token> tokenize(std::string_view text);

/// Decodes a Text token (quotes and backslash escapes) into its value.
std::string unquote(const Token& token);

/// Clauses that write or alter the graph, or that escape the read-only subset.
bool is_write_keyword(std::string_view upper);

}  // namespace kgchat::cypher
