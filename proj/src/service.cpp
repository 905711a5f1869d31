#include "kgchat/service.hpp"

#include <stdexcept>

#include <json.hpp>

namespace kgchat::service {

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

/// Parses the request body as a JSON object; answers 400 and returns nullopt otherwise.
std::optional<json> body_object(const httplib::Request& req, httplib::Response& res) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    send_error(res, 400, "request body must be a JSON object");
    return std::nullopt;
  }
  return body;
}

std::optional<std::string> string_field(const json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

void ServiceConfig::check() const {
  if (port < 0 || port > 65535) throw std::invalid_argument("port must be in [0, 65535] (0 picks a free port)");
  if (max_limit < 1) throw std::invalid_argument("max-limit must be at least 1");
  if (dimension < 2) throw std::invalid_argument("dimension must be at least 2");
  backend.check();
}

std::string request_token(const httplib::Request& req, const std::string& fallback) {
  const std::string auth = req.get_header_value("Authorization");
  constexpr std::string_view kBearer = "Bearer ";
  if (auth.size() > kBearer.size() && auth.compare(0, kBearer.size(), kBearer) == 0) {
    return auth.substr(kBearer.size());
  }
  return fallback;
}

void install_routes(httplib::Server& server, orch::Orchestrator& orchestrator) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Authorization, Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Post("/api/chat", [&orchestrator](const httplib::Request& req, httplib::Response& res) {
    auto body = body_object(req, res);
    if (!body) return;
    auto message = string_field(*body, "message");
    if (!message || message->empty()) return send_error(res, 400, "message must be a non-empty string");
    const std::string token = request_token(req, string_field(*body, "token").value_or(""));
    const std::string session = string_field(*body, "session_id").value_or("default");
    try {
      send_json(res, 200, orchestrator.chat(session, *message, token));
    } catch (const rbac::InvalidToken&) {
      send_error(res, 401, "invalid token");
    } catch (const orch::InternalError&) {
      send_error(res, 500, "internal error");
    }
  });

  server.Post("/api/feedback", [&orchestrator](const httplib::Request& req, httplib::Response& res) {
    auto body = body_object(req, res);
    if (!body) return;
    auto turn_id = string_field(*body, "turn_id");
    if (!turn_id) return send_error(res, 400, "turn_id must be a string");
    auto rating = orch::parse_rating(string_field(*body, "rating").value_or(""));
    if (!rating) return send_error(res, 400, "rating must be 'up' or 'down'");
    orch::FeedbackRecord record{*turn_id, *rating, string_field(*body, "comment"), orchestrator.now()};
    try {
      orchestrator.record_feedback(record);
    } catch (const orch::UnknownTurn& e) {
      return send_error(res, 404, e.what());
    }
    send_json(res, 200, {{"ok", true}});
  });

  server.Get(R"(/api/articles/(-?\d+))", [&orchestrator](const httplib::Request& req, httplib::Response& res) {
    rbac::Principal principal;
    try {
      principal = rbac::authenticate(request_token(req, req.get_param_value("token")), orchestrator.policy());
    } catch (const rbac::InvalidToken&) {
      return send_error(res, 401, "invalid token");
    }
    if (!rbac::labels_of(principal, orchestrator.policy()).contains("Article")) {
      return send_error(res, 403, "role cannot read Article nodes");
    }
    std::int64_t id = 0;
    try {
      id = std::stoll(req.matches[1].str());
    } catch (const std::out_of_range&) {
      return send_error(res, 404, "article not found");
    }
    auto view = orchestrator.graph().read();
    const Node* node = view->find_article(id);
    if (!node) return send_error(res, 404, "article not found");
    json out = json::object();
    for (const auto& [key, value] : node->properties) {
      if (key != "content_vector") out[key] = value;
    }
    send_json(res, 200, out);
  });

  server.Get("/api/roles/me", [&orchestrator](const httplib::Request& req, httplib::Response& res) {
    rbac::Principal principal;
    try {
      principal = rbac::authenticate(request_token(req, req.get_param_value("token")), orchestrator.policy());
    } catch (const rbac::InvalidToken&) {
      return send_error(res, 401, "invalid token");
    }
    json caps = json::array();
    for (auto c : rbac::capabilities_of(principal, orchestrator.policy())) caps.push_back(to_string(c));
    send_json(res, 200, {{"user", principal.user_id}, {"roles", principal.roles}, {"capabilities", caps}});
  });

  server.Get("/api/health", [&orchestrator](const httplib::Request&, httplib::Response& res) {
    const auto articles = orchestrator.graph().read()->article_count();
    send_json(res, 200, {{"status", "ok"}, {"articles", articles}});
  });

  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    send_error(res, 500, "internal error");
  });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty() && res.status == 404) send_error(res, 404, "not found");
  });
}

Service::Service(orch::Orchestrator& orchestrator) : orchestrator_(orchestrator) {
  // httplib's default also sets SO_REUSEPORT, which lets a second server
  // silently share a taken port instead of failing to bind.
  server_.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
  });
  // Headers and body go out in separate writes; without this each reply
  // waits on the peer's delayed ACK.
  server_.set_tcp_nodelay(true);
  install_routes(server_, orchestrator_);
}

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_.bind_to_any_port(host);
    if (bound <= 0) throw std::runtime_error("cannot bind " + host);
    return bound;
  }
  if (!server_.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void Service::run() {
  server_.listen_after_bind();
  orchestrator_.flush();
}

void Service::stop() { server_.stop(); }

}  // namespace kgchat::service
