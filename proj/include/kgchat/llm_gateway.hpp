#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kgchat/capability.hpp"
#include "kgchat/cypher/evaluator.hpp"

namespace kgchat::llm {

struct ChatMessage {
  std::string role;  // "user" or "assistant"
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct LlmRequest {
  std::string system;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::int64_t max_tokens = 512;
};

struct LlmResponse {
  std::string text;
  std::string backend;  // "mock" or "http"
  std::int64_t latency_ms = 0;
};

enum class BackendMode { Mock, Http };

struct BackendConfig {
  BackendMode mode = BackendMode::Mock;
  std::string endpoint;  // http://host[:port]/path
  std::string model;
  std::int64_t timeout_ms = 10000;

  /// Reads KGCHAT_LLM_MODE, KGCHAT_LLM_URL and KGCHAT_LLM_MODEL.
  static BackendConfig from_env();
  /// Throws std::invalid_argument when http mode lacks endpoint or model.
  void check() const;
};

class LlmError : public std::runtime_error {
 public:
  enum class Kind { InvalidRequest, Timeout, Transport, MalformedReply };

  LlmError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(LlmError::Kind kind);

/// Throws LlmError(InvalidRequest) unless messages are non-empty, the last one
/// is from the user, roles are user/assistant and temperature is >= 0.
void check_request(const LlmRequest& request);

/// Dispatches to the mock or the http backend.
LlmResponse complete(const LlmRequest& request, const BackendConfig& config);

/// The deterministic offline backend. A pure function of the request.
std::string mock_reply(const LlmRequest& request);

/// POSTs a chat-completions request and returns choices[0].message.content.
/// The whole call is bounded by config.timeout_ms.
LlmResponse http_complete(const LlmRequest& request, const BackendConfig& config);

/// Instruction understood by the mock: the text is quoted in triple quotes.
std::string summarize_prompt(std::string_view text);

/// Instruction understood by the mock: the intent and rows travel as JSON on
/// the lines after the first.
std::string format_insights_prompt(const Intent& intent, const cypher::ResultTable& rows);

/// Deterministic plain-text rendering of capability rows.
std::string render_insights(const Intent& intent, const cypher::ResultTable& rows);

/// First `count` sentences of `text`, whitespace-collapsed.
std::string leading_sentences(std::string_view text, std::size_t count);

inline constexpr std::string_view kSummarizeInstruction = "Summarize the following text:";
inline constexpr std::string_view kFormatInstruction = "Format the following knowledge-graph insights for the user.";
inline constexpr std::string_view kNoDataMessage = "No matching data was found in the knowledge graph.";

}  // namespace kgchat::llm
