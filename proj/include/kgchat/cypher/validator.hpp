#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgchat/cypher/ast.hpp"

namespace kgchat::cypher {

/// Allowlists and size limits enforced by the validation layer.
struct CvlPolicy {
  std::set<std::string, std::less<>> labels{"Article", "Topic"};
  std::set<std::string, std::less<>> relationship_kinds{"HAS_TOPIC"};
  /// Readable properties per label.
  std::map<std::string, std::set<std::string, std::less<>>, std::less<>> properties{
      {"Article",
       {"article_id", "title", "content", "sentiment", "compound", "content_vector", "published_date", "publisher",
        "country"}},
      {"Topic", {"topic_id", "name"}},
  };
  /// Function name -> arity.
  std::map<std::string, std::size_t, std::less<>> functions{{"gds.similarity.cosine", 2}};
  std::int64_t max_limit = 100;
  std::size_t max_query_bytes = 4096;
  std::size_t max_literals = 32;
  std::size_t max_text_literal_bytes = 256;
  std::size_t max_vector_literal_length = 1024;
  std::size_t max_node_patterns = 4;
  /// When set, every node pattern must carry a label (used for roles that may
  /// read only part of the schema).
  bool require_labels = false;
};

struct Violation {
  std::string code;
  std::string message;
  std::size_t offset = 0;

  friend bool operator==(const Violation&, const Violation&) = default;
};

enum class Verdict { Accepted, Rejected };

std::string_view to_string(Verdict v);

struct ValidationReport {
  Verdict verdict = Verdict::Accepted;
  std::vector<Violation> violations;
  std::int64_t effective_limit = 0;
  bool limit_injected = false;

  bool accepted() const { return verdict == Verdict::Accepted; }
  bool has(std::string_view code) const;

  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

/// Checks a parsed query against the policy. Pure and total.
ValidationReport validate(const QueryAst& ast, const CvlPolicy& policy);

struct ScreenedQuery {
  ValidationReport report;
  std::optional<QueryAst> ast;  // present whenever parsing succeeded
};

/// Full gate for raw query text: size check, tokenize, write-keyword scan,
/// parse, then validate. Lexer and parser failures become LEX_ERROR /
/// PARSE_ERROR violations; write or DDL keywords become WRITE_CLAUSE before
/// any parsing is attempted.
ScreenedQuery screen(std::string_view text, const CvlPolicy& policy);

void to_json(nlohmann::json& j, const Violation& v);
void to_json(nlohmann::json& j, const ValidationReport& r);

}  // namespace kgchat::cypher
