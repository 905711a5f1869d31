#include "kgchat/llm_gateway.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <regex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace kgchat::llm {

namespace {

using nlohmann::json;

constexpr std::string_view kTripleQuote = "\"\"\"";

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  bool pending = false;
  for (char c : text) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out += ' ';
    pending = false;
    out += c;
  }
  return out;
}

std::optional<std::size_t> find_column(const cypher::ResultTable& t, std::string_view name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i] == name) return i;
  }
  return std::nullopt;
}

std::string fixed2(const PropertyValue& v) {
  if (v.is_int() || v.is_float()) return format_fixed(v.as_number(), 2);
  return v.to_display();
}

std::string render_rows(const cypher::ResultTable& rows) {
  std::string out = "Query returned " + std::to_string(rows.rows.size()) + (rows.rows.size() == 1 ? " row:" : " rows:");
  for (const auto& row : rows.rows) {
    out += "\n";
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ", ";
      out += rows.columns[c] + ": " + row[c].to_display();
    }
  }
  return out;
}

std::string render_similar(const cypher::ResultTable& rows) {
  auto id = find_column(rows, "a2.article_id");
  auto score = find_column(rows, "similarity_score");
  if (!id || !score) return render_rows(rows);
  std::string out = "Top similar articles: ";
  for (std::size_t i = 0; i < rows.rows.size(); ++i) {
    if (i) out += ", ";
    out += "#" + rows.rows[i][*id].to_display() + " (score " + fixed2(rows.rows[i][*score]) + ")";
  }
  return out + ".";
}

std::string render_sentiment(const Intent& intent, const cypher::ResultTable& rows) {
  auto label = find_column(rows, "n.sentiment");
  auto compound = find_column(rows, "n.compound");
  if (!label || !compound || rows.rows.size() != 1 || !intent.article_id) return render_rows(rows);
  const auto& row = rows.rows.front();
  return "Article " + std::to_string(*intent.article_id) + " sentiment: " + row[*label].to_display() + " (compound " +
         fixed2(row[*compound]) + ").";
}

std::string render_topic(const Intent& intent, const cypher::ResultTable& rows) {
  auto topic = find_column(rows, "predicted_topic");
  auto via = find_column(rows, "similar_article");
  auto score = find_column(rows, "similarity_score");
  if (!topic || !via || !score || !intent.article_id) return render_rows(rows);
  const auto& row = rows.rows.front();
  return "Predicted topic for article " + std::to_string(*intent.article_id) + ": " + row[*topic].to_display() +
         " (via article " + row[*via].to_display() + ", similarity " + fixed2(row[*score]) + ").";
}

std::string mock_summary(std::string_view prompt) {
  std::string_view body = prompt.substr(kSummarizeInstruction.size());
  if (auto open = body.find(kTripleQuote); open != std::string_view::npos) {
    body = body.substr(open + kTripleQuote.size());
    if (auto close = body.rfind(kTripleQuote); close != std::string_view::npos) body = body.substr(0, close);
  }
  std::string lead = leading_sentences(body, 2);
  if (lead.empty()) return "Summary: there is no text to summarize.";
  return "Summary: " + lead;
}

std::string mock_format(std::string_view prompt) {
  auto newline = prompt.find('\n');
  if (newline == std::string_view::npos) return std::string(kNoDataMessage);
  json payload = json::parse(prompt.substr(newline + 1), nullptr, false);
  if (payload.is_discarded() || !payload.is_object()) return std::string(kNoDataMessage);

  Intent intent;
  if (auto cap = parse_capability(payload.value("capability", ""))) intent.capability = *cap;
  const json args = payload.value("args", json::object());
  if (args.contains("article_id") && args["article_id"].is_number_integer()) {
    intent.article_id = args["article_id"].get<std::int64_t>();
  }
  cypher::ResultTable table;
  table.columns = payload.value("columns", std::vector<std::string>{});
  for (const auto& jr : payload.value("rows", json::array())) {
    std::vector<PropertyValue> row;
    for (const auto& cell : jr) row.push_back(cell.get<PropertyValue>());
    table.rows.push_back(std::move(row));
  }
  return render_insights(intent, table);
}

}  // namespace

std::string_view to_string(LlmError::Kind kind) {
  switch (kind) {
    case LlmError::Kind::InvalidRequest: return "InvalidRequest";
    case LlmError::Kind::Timeout: return "Timeout";
    case LlmError::Kind::Transport: return "TransportError";
    case LlmError::Kind::MalformedReply: return "MalformedBackendReply";
  }
  return "?";
}

BackendConfig BackendConfig::from_env() {
  BackendConfig c;
  const std::string mode = env_or("KGCHAT_LLM_MODE", "mock");
  if (mode == "mock") {
    c.mode = BackendMode::Mock;
  } else if (mode == "http") {
    c.mode = BackendMode::Http;
  } else {
    throw std::invalid_argument("KGCHAT_LLM_MODE must be 'mock' or 'http', got '" + mode + "'");
  }
  c.endpoint = env_or("KGCHAT_LLM_URL", "");
  c.model = env_or("KGCHAT_LLM_MODEL", "");
  c.check();
  return c;
}

void BackendConfig::check() const {
  if (timeout_ms <= 0) throw std::invalid_argument("timeout_ms must be positive");
  if (mode != BackendMode::Http) return;
  if (endpoint.empty()) throw std::invalid_argument("http backend requires an endpoint URL");
  if (model.empty()) throw std::invalid_argument("http backend requires a model name");
}

void check_request(const LlmRequest& request) {
  if (request.messages.empty()) throw LlmError(LlmError::Kind::InvalidRequest, "request has no messages");
  for (const auto& m : request.messages) {
    if (m.role != "user" && m.role != "assistant") {
      throw LlmError(LlmError::Kind::InvalidRequest, "unsupported message role '" + m.role + "'");
    }
  }
  if (request.messages.back().role != "user") {
    throw LlmError(LlmError::Kind::InvalidRequest, "last message must come from the user");
  }
  if (!(request.temperature >= 0.0)) throw LlmError(LlmError::Kind::InvalidRequest, "temperature must be >= 0");
  if (request.max_tokens <= 0) throw LlmError(LlmError::Kind::InvalidRequest, "max_tokens must be positive");
}

std::string leading_sentences(std::string_view text, std::size_t count) {
  const std::string flat = collapse_whitespace(text);
  std::size_t end = 0;
  std::size_t found = 0;
  for (std::size_t i = 0; i < flat.size() && found < count; ++i) {
    const char c = flat[i];
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == flat.size() || flat[i + 1] == ' ')) {
      end = i + 1;
      ++found;
    }
  }
  if (found < count) end = flat.size();
  return flat.substr(0, end);
}

std::string summarize_prompt(std::string_view text) {
  return std::string(kSummarizeInstruction) + "\n" + std::string(kTripleQuote) + "\n" + std::string(text) + "\n" +
         std::string(kTripleQuote);
}

std::string format_insights_prompt(const Intent& intent, const cypher::ResultTable& rows) {
  json payload = intent;
  payload["columns"] = rows.columns;
  json jrows = json::array();
  for (const auto& row : rows.rows) {
    json jr = json::array();
    for (const auto& cell : row) jr.push_back(cell);
    jrows.push_back(std::move(jr));
  }
  payload["rows"] = std::move(jrows);
  return std::string(kFormatInstruction) + "\n" + payload.dump();
}

std::string render_insights(const Intent& intent, const cypher::ResultTable& rows) {
  if (rows.rows.empty()) return std::string(kNoDataMessage);
  switch (intent.capability) {
    case Capability::SimilarArticles: return render_similar(rows);
    case Capability::SentimentLookup: return render_sentiment(intent, rows);
    case Capability::TopicPrediction: return render_topic(intent, rows);
    default: return render_rows(rows);
  }
}

std::string mock_reply(const LlmRequest& request) {
  check_request(request);
  const std::string& prompt = request.messages.back().content;
  if (prompt.starts_with(kSummarizeInstruction)) return mock_summary(prompt);
  if (prompt.starts_with(kFormatInstruction)) return mock_format(prompt);
  return "I can help with AI news questions: ask for articles similar to a given article, the sentiment of an "
         "article, a topic prediction, or a summary.";
}

LlmResponse http_complete(const LlmRequest& request, const BackendConfig& config) {
  check_request(request);
  config.check();

  static const std::regex url_re(R"(^(http://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(config.endpoint, m, url_re)) {
    throw LlmError(LlmError::Kind::Transport, "unsupported endpoint URL '" + config.endpoint + "' (http:// only)");
  }
  const std::string base = m[1].str();
  const std::string path = m[2].matched ? m[2].str() : "/";

  json messages = json::array();
  if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
  for (const auto& msg : request.messages) messages.push_back({{"role", msg.role}, {"content", msg.content}});
  const json body = {{"model", config.model},
                     {"messages", messages},
                     {"temperature", request.temperature},
                     {"max_tokens", request.max_tokens}};
  const std::string payload = body.dump();

  const auto start = std::chrono::steady_clock::now();
  const auto budget = std::chrono::milliseconds(config.timeout_ms);
  httplib::Client client(base);
  const auto sec = config.timeout_ms / 1000;
  const auto usec = (config.timeout_ms % 1000) * 1000;
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);

  // The socket timeouts are per operation; the watchdog bounds the whole call.
  std::mutex mu;
  std::condition_variable cv;
  bool done = false;
  httplib::Result result{nullptr, httplib::Error::Unknown};
  std::thread worker([&] {
    auto r = client.Post(path, payload, "application/json");
    std::lock_guard lock(mu);
    result = std::move(r);
    done = true;
    cv.notify_one();
  });
  bool timed_out = false;
  {
    std::unique_lock lock(mu);
    if (!cv.wait_for(lock, budget, [&] { return done; })) {
      timed_out = true;
      client.stop();
    }
  }
  worker.join();
  const auto latency =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();

  if (timed_out) {
    throw LlmError(LlmError::Kind::Timeout, "backend did not answer within " + std::to_string(config.timeout_ms) + " ms");
  }
  if (!result) {
    const auto err = result.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
      throw LlmError(LlmError::Kind::Timeout, "backend timed out: " + httplib::to_string(err));
    }
    throw LlmError(LlmError::Kind::Transport, "backend request failed: " + httplib::to_string(err));
  }
  if (result->status != 200) {
    throw LlmError(LlmError::Kind::Transport, "backend answered HTTP " + std::to_string(result->status));
  }
  json reply = json::parse(result->body, nullptr, false);
  if (reply.is_discarded()) throw LlmError(LlmError::Kind::MalformedReply, "backend reply is not JSON");
  try {
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    if (!content.is_string() || content.get_ref<const std::string&>().empty()) {
      throw LlmError(LlmError::Kind::MalformedReply, "backend reply has empty content");
    }
    return {content.get<std::string>(), "http", latency};
  } catch (const json::exception& e) {
    throw LlmError(LlmError::Kind::MalformedReply, std::string("backend reply lacks choices[0].message.content: ") +
                                                       e.what());
  }
}

LlmResponse complete(const LlmRequest& request, const BackendConfig& config) {
  if (config.mode == BackendMode::Http) return http_complete(request, config);
  return {mock_reply(request), "mock", 0};
}

}  // namespace kgchat::llm
