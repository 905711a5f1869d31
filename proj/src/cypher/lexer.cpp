#include "kgchat/cypher/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string_view>

using namespace std::string_view_literals;

namespace kgchat::cypher {

namespace {

constexpr std::array kReadKeywords = {
    "MATCH"sv, "WHERE"sv, "WITH"sv, "RETURN"sv, "ORDER"sv, "BY"sv,   "ASC"sv,  "ASCENDING"sv,
    "DESC"sv, "DESCENDING"sv, "LIMIT"sv, "AS"sv,    "AND"sv,   "OR"sv,   "NOT"sv,  "TRUE"sv,
    "FALSE"sv, "NULL"sv, "SKIP"sv, "DISTINCT"sv, "OPTIONAL"sv, "UNWIND"sv, "UNION"sv, "XOR"sv,
};

// Recognized so hostile text fails at the keyword scan before parsing.
constexpr std::array kWriteKeywords = {
    "CREATE"sv, "MERGE"sv, "DELETE"sv, "DETACH"sv, "SET"sv, "REMOVE"sv, "DROP"sv, "CALL"sv, "LOAD"sv, "FOREACH"sv,
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
  return out;
}

bool is_keyword(std::string_view upper_word) {
  return std::find(kReadKeywords.begin(), kReadKeywords.end(), upper_word) != kReadKeywords.end() ||
         is_write_keyword(upper_word);
}

}  // namespace

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Keyword: return "Keyword";
    case TokenKind::Identifier: return "Identifier";
    case TokenKind::Integer: return "Integer";
    case TokenKind::Float: return "Float";
    case TokenKind::Text: return "Text";
    case TokenKind::Symbol: return "Symbol";
  }
  return "?";
}

bool is_write_keyword(std::string_view upper_word) {
  return std::find(kWriteKeywords.begin(), kWriteKeywords.end(), upper_word) != kWriteKeywords.end();
}

std::string Token::keyword() const { return upper(text); }

bool Token::is_keyword(std::string_view up) const { return kind == TokenKind::Keyword && upper(text) == up; }

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (is_ident_start(c)) {
      while (i < n && is_ident_char(text[i])) ++i;
      auto word = text.substr(start, i - start);
      out.push_back({is_keyword(upper(word)) ? TokenKind::Keyword : TokenKind::Identifier, std::string(word), start});
      continue;
    }
    if (is_digit(c)) {
      while (i < n && is_digit(text[i])) ++i;
      bool is_float = false;
      if (i + 1 < n && text[i] == '.' && is_digit(text[i + 1])) {
        is_float = true;
        ++i;
        while (i < n && is_digit(text[i])) ++i;
      }
      if (i < n && (text[i] == 'e' || text[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < n && (text[j] == '+' || text[j] == '-')) ++j;
        if (j < n && is_digit(text[j])) {
          is_float = true;
          i = j;
          while (i < n && is_digit(text[i])) ++i;
        }
      }
      if (i < n && is_ident_start(text[i])) throw LexError(i, "malformed number at offset " + std::to_string(start));
      out.push_back({is_float ? TokenKind::Float : TokenKind::Integer, std::string(text.substr(start, i - start)),
                     start});
      continue;
    }
    if (c == '\'' || c == '"') {
      ++i;
      bool closed = false;
      while (i < n) {
        if (text[i] == '\\') {
          if (i + 1 >= n) break;
          const char e = text[i + 1];
          if (e != '\\' && e != '\'' && e != '"' && e != 'n' && e != 't') {
            throw LexError(i, "unsupported escape sequence at offset " + std::to_string(i));
          }
          i += 2;
          continue;
        }
        if (text[i] == c) {
          ++i;
          closed = true;
          break;
        }
        ++i;
      }
      if (!closed) throw LexError(start, "unterminated string literal at offset " + std::to_string(start));
      out.push_back({TokenKind::Text, std::string(text.substr(start, i - start)), start});
      continue;
    }
    if (c == '<' && i + 1 < n && (text[i + 1] == '>' || text[i + 1] == '=')) {
      out.push_back({TokenKind::Symbol, std::string(text.substr(i, 2)), start});
      i += 2;
      continue;
    }
    if (c == '>' && i + 1 < n && text[i + 1] == '=') {
      out.push_back({TokenKind::Symbol, ">=", start});
      i += 2;
      continue;
    }
    static constexpr std::string_view kSymbols = "()[]{},.:-<>=;";
    if (kSymbols.find(c) != std::string_view::npos) {
      out.push_back({TokenKind::Symbol, std::string(1, c), start});
      ++i;
      continue;
    }
    throw LexError(i, std::string("unexpected character '") + c + "' at offset " + std::to_string(i));
  }
  return out;
}

std::string unquote(const Token& token) {
  const std::string& raw = token.text;
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    if (raw[i] == '\\') {
      const char e = raw[++i];
      out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
    } else {
      out += raw[i];
    }
  }
  return out;
}

}  // namespace kgchat::cypher
