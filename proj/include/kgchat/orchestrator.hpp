#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgchat/capability.hpp"
#include "kgchat/cypher/evaluator.hpp"
#include "kgchat/cypher/validator.hpp"
#include "kgchat/graph_store.hpp"
#include "kgchat/llm_gateway.hpp"
#include "kgchat/rbac.hpp"

namespace kgchat::orch {

struct ChatTurn {
  std::string turn_id;
  std::string session_id;
  std::string user_message;
  std::int64_t timestamp = 0;  // unix ms
};

void to_json(nlohmann::json& j, const ChatTurn& t);

/// Per-turn provenance: what was routed, who allowed it, what ran and what
/// came back.
struct Explanation {
  Intent intent;
  rbac::AccessDecision rbac;
  std::optional<std::string> cypher_text;
  std::optional<cypher::ValidationReport> validation;
  std::optional<cypher::ResultTable> rows;
  std::vector<std::string> anomalies;
};

void to_json(nlohmann::json& j, const Explanation& e);

struct ChatResponse {
  std::string turn_id;
  std::string reply;
  Explanation explanation;
};

void to_json(nlohmann::json& j, const ChatResponse& r);

enum class Rating { Up, Down };

std::string_view to_string(Rating r);
std::optional<Rating> parse_rating(std::string_view text);

struct FeedbackRecord {
  std::string turn_id;
  Rating rating = Rating::Up;
  std::optional<std::string> comment;
  std::int64_t timestamp = 0;

  friend bool operator==(const FeedbackRecord&, const FeedbackRecord&) = default;
};

void to_json(nlohmann::json& j, const FeedbackRecord& r);
FeedbackRecord feedback_from_json(const nlohmann::json& j);

/// Every record of a feedback log, in file order. A missing file reads as empty.
std::vector<FeedbackRecord> read_feedback_log(const std::filesystem::path& path);

class UnknownTurn : public std::runtime_error {
 public:
  explicit UnknownTurn(const std::string& turn_id) : std::runtime_error("unknown turn '" + turn_id + "'") {}
};

/// An unexpected failure while handling a turn. Carries no partial results.
class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `base` narrowed to the labels the principal may read. When some label is
/// dropped, every node pattern must carry a label.
cypher::CvlPolicy cvl_policy_for(const rbac::Principal& principal, const rbac::Policy& policy,
                                 const cypher::CvlPolicy& base);

/// Trim, collapse whitespace and lowercase.
std::string normalize_prompt(std::string_view message);

/// Rule-based routing, first match wins: a leading "cypher:" (raw query),
/// then similar / sentiment / topic / summarize mentions of "article <N>",
/// "summarize: <text>", fact-check and industry keywords; anything else is a
/// generic question. "top <N>" sets k for similarity requests.
Intent route_prompt(std::string_view message);

/// Thread-safe JSON Lines writer; every line is flushed.
class JsonlAppender {
 public:
  explicit JsonlAppender(std::filesystem::path path);

  void append(const nlohmann::json& record);
  void flush();
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mutex_;
};

struct OrchestratorConfig {
  llm::BackendConfig backend;
  cypher::CvlPolicy cvl;
  std::optional<std::filesystem::path> audit_log;
  std::optional<std::filesystem::path> feedback_log;
  /// Prior messages per session passed to the backend for generic turns.
  std::size_t history_limit = 8;
};

std::int64_t unix_millis();
/// Random RFC 4122 version 4 UUID.
std::string random_uuid();

class Orchestrator {
 public:
  using Clock = std::function<std::int64_t()>;
  using IdGenerator = std::function<std::string()>;

  Orchestrator(SharedGraph& graph, rbac::Policy policy, OrchestratorConfig config, Clock clock = unix_millis,
               IdGenerator ids = random_uuid);

  /// Stamps a new turn with an id and the current time.
  ChatTurn make_turn(std::string session_id, std::string user_message);

  /// Authenticate, route, authorize, dispatch, render and audit one turn.
  /// Throws rbac::InvalidToken before anything else happens, and
  /// InternalError on unexpected failures.
  ChatResponse handle_turn(const ChatTurn& turn, std::string_view token);

  /// make_turn followed by handle_turn.
  ChatResponse chat(std::string session_id, std::string message, std::string_view token);

  /// Throws UnknownTurn unless the turn was handled by this service (or is in
  /// the audit log it was started with).
  void record_feedback(const FeedbackRecord& record);
  std::vector<FeedbackRecord> feedback_for(std::string_view turn_id) const;

  std::size_t handled_turns() const;
  const rbac::Policy& policy() const { return policy_; }
  const OrchestratorConfig& config() const { return config_; }
  SharedGraph& graph() { return graph_; }
  std::int64_t now() const { return clock_(); }

  /// Flushes the audit and feedback logs.
  void flush();

 private:
  struct Dispatch {
    std::string reply;
    Explanation explanation;
  };

  Dispatch dispatch(const ChatTurn& turn, const rbac::Principal& principal, Explanation explanation);
  Dispatch run_llm_only(const ChatTurn& turn, Explanation explanation);
  Dispatch run_kg(const cypher::CvlPolicy& cvl, Explanation explanation);
  Dispatch run_raw_cypher(const rbac::Principal& principal, Explanation explanation);
  std::string render(const Intent& intent, const cypher::ResultTable& rows, std::vector<std::string>& anomalies);
  std::vector<llm::ChatMessage> history_for(const std::string& session_id) const;
  void remember(const ChatTurn& turn, const std::string& reply);

  SharedGraph& graph_;
  rbac::Policy policy_;
  OrchestratorConfig config_;
  Clock clock_;
  IdGenerator ids_;
  std::optional<JsonlAppender> audit_;
  std::optional<JsonlAppender> feedback_log_;

  mutable std::mutex state_mutex_;
  std::set<std::string, std::less<>> turns_;
  std::size_t handled_ = 0;
  std::map<std::string, std::vector<llm::ChatMessage>, std::less<>> sessions_;
  std::map<std::string, std::vector<FeedbackRecord>, std::less<>> feedback_;
};

}  // namespace kgchat::orch
