#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <httplib.h>

#include "kgchat/llm_gateway.hpp"
#include "kgchat/orchestrator.hpp"

namespace kgchat::service {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path snapshot_path;
  std::optional<std::filesystem::path> policy_path;
  llm::BackendConfig backend;
  std::int64_t max_limit = 100;
  std::size_t dimension = 64;
  std::optional<std::filesystem::path> audit_log;
  std::optional<std::filesystem::path> feedback_log;

  /// Throws std::invalid_argument on an out-of-range port, limit or dimension.
  void check() const;
};

/// Bearer token from the Authorization header, else from `fallback`.
std::string request_token(const httplib::Request& req, const std::string& fallback);

/// Registers the JSON API on `server`:
///   POST /api/chat, POST /api/feedback, GET /api/articles/{id},
///   GET /api/roles/me, GET /api/health.
void install_routes(httplib::Server& server, orch::Orchestrator& orchestrator);

/// Owns the httplib server bound to an orchestrator.
class Service {
 public:
  explicit Service(orch::Orchestrator& orchestrator);

  /// Binds; throws std::runtime_error (BindError) when the port is taken.
  /// Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Logs are flushed on return.
  void run();
  void stop();
  bool running() const { return server_.is_running(); }

 private:
  orch::Orchestrator& orchestrator_;
  httplib::Server server_;
};

}  // namespace kgchat::service
