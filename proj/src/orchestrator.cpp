#include "kgchat/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <random>
#include <regex>

#include "kgchat/capabilities.hpp"

namespace kgchat::orch {

namespace {

using nlohmann::json;

constexpr std::string_view kSystemPrompt =
    "You are an assistant answering questions about AI news articles. Be concise and factual.";

std::optional<std::int64_t> parse_id(const std::string& digits) {
  try {
    return std::stoll(digits);
  } catch (const std::out_of_range&) {
    return std::nullopt;
  }
}

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  auto begin = std::find_if_not(s.begin(), s.end(), is_space);
  auto end = std::find_if_not(s.rbegin(), s.rend(), is_space).base();
  return begin < end ? std::string(begin, end) : std::string();
}

std::string violations_text(const cypher::ValidationReport& report) {
  std::string out;
  for (const auto& v : report.violations) {
    if (!out.empty()) out += "; ";
    out += v.code + " (" + v.message + ")";
  }
  return out;
}

bool has_non_finite(const cypher::ResultTable& rows) {
  for (const auto& row : rows.rows) {
    for (const auto& cell : row) {
      if (cell.is_float() && !std::isfinite(cell.as_float())) return true;
    }
  }
  return false;
}

std::string unsupported_reply(Capability c) {
  const std::string what = c == Capability::FactCheck ? "Fact-checking" : "Industry-sector prediction";
  return what + " is recognized but not supported by this service, so no answer was generated.";
}

}  // namespace

cypher::CvlPolicy cvl_policy_for(const rbac::Principal& principal, const rbac::Policy& policy,
                                 const cypher::CvlPolicy& base) {
  cypher::CvlPolicy out = base;
  const auto readable = rbac::labels_of(principal, policy);
  std::set<std::string, std::less<>> kept;
  for (const auto& label : base.labels) {
    if (readable.contains(label)) kept.insert(label);
  }
  if (kept.size() != base.labels.size()) out.require_labels = true;
  out.labels = std::move(kept);
  return out;
}

void to_json(json& j, const ChatTurn& t) {
  j = {{"turn_id", t.turn_id}, {"session_id", t.session_id}, {"user_message", t.user_message},
       {"timestamp", t.timestamp}};
}

void to_json(json& j, const Explanation& e) {
  j = json::object();
  j["capability"] = e.intent;
  j["rbac"] = e.rbac;
  j["cypher_text"] = e.cypher_text ? json(*e.cypher_text) : json(nullptr);
  j["validation"] = e.validation ? json(*e.validation) : json(nullptr);
  j["rows"] = e.rows ? json(*e.rows) : json(nullptr);
  j["anomalies"] = e.anomalies;
}

void to_json(json& j, const ChatResponse& r) {
  j = {{"turn_id", r.turn_id}, {"reply", r.reply}, {"explanation", r.explanation}};
}

std::string_view to_string(Rating r) { return r == Rating::Up ? "up" : "down"; }

std::optional<Rating> parse_rating(std::string_view text) {
  if (text == "up") return Rating::Up;
  if (text == "down") return Rating::Down;
  return std::nullopt;
}

void to_json(json& j, const FeedbackRecord& r) {
  j = {{"turn_id", r.turn_id}, {"rating", to_string(r.rating)}, {"timestamp", r.timestamp}};
  j["comment"] = r.comment ? json(*r.comment) : json(nullptr);
}

FeedbackRecord feedback_from_json(const json& j) {
  FeedbackRecord r;
  r.turn_id = j.at("turn_id").get<std::string>();
  auto rating = parse_rating(j.at("rating").get<std::string>());
  if (!rating) throw std::invalid_argument("rating must be 'up' or 'down'");
  r.rating = *rating;
  if (j.contains("comment") && !j.at("comment").is_null()) r.comment = j.at("comment").get<std::string>();
  r.timestamp = j.value("timestamp", std::int64_t{0});
  return r;
}

std::vector<FeedbackRecord> read_feedback_log(const std::filesystem::path& path) {
  std::vector<FeedbackRecord> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    out.push_back(feedback_from_json(json::parse(line)));
  }
  return out;
}

std::string normalize_prompt(std::string_view message) {
  std::string out;
  bool pending = false;
  for (unsigned char c : message) {
    if (std::isspace(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out += ' ';
    pending = false;
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

Intent route_prompt(std::string_view message) {
  static const std::regex cypher_re(R"(^\s*cypher\s*:([\s\S]*)$)", std::regex::icase);
  static const std::regex similar_re(R"(\bsimilar\w*\b.*\barticle\s*#?(\d+)\b)");
  static const std::regex sentiment_re(R"(\bsentiments?\b.*\barticle\s*#?(\d+)\b)");
  static const std::regex topic_re(R"(\btopics?\b.*\barticle\s*#?(\d+)\b)");
  static const std::regex summarize_re(R"(\bsummar(?:ize|ise|y)\b.*\barticle\s*#?(\d+)\b)");
  static const std::regex summarize_text_re(R"(^\s*summar(?:ize|ise)\s*:\s*([\s\S]+)$)", std::regex::icase);
  static const std::regex top_k_re(R"(\btop\s+(\d+)\b)");
  static const std::regex fact_re(R"(\bfact[- ]?check)");
  static const std::regex industry_re(R"(\bindustr(?:y|ies)\b)");

  const std::string original(message);
  std::smatch m;
  if (std::regex_match(original, m, cypher_re)) {
    return Intent{Capability::RawCypher, std::nullopt, std::nullopt, std::nullopt, trim(m[1].str())};
  }

  const std::string text = normalize_prompt(message);
  auto with_article = [&](const std::regex& re, Capability c) -> std::optional<Intent> {
    if (!std::regex_search(text, m, re)) return std::nullopt;
    auto id = parse_id(m[1].str());
    if (!id) return std::nullopt;
    Intent intent;
    intent.capability = c;
    intent.article_id = id;
    return intent;
  };

  if (auto intent = with_article(similar_re, Capability::SimilarArticles)) {
    intent->k = kg::kDefaultSimilarK;
    std::smatch km;
    if (std::regex_search(text, km, top_k_re)) {
      if (auto k = parse_id(km[1].str())) intent->k = *k;
    }
    return *intent;
  }
  if (auto intent = with_article(sentiment_re, Capability::SentimentLookup)) return *intent;
  if (auto intent = with_article(topic_re, Capability::TopicPrediction)) {
    intent->threshold = kg::kDefaultTopicThreshold;
    return *intent;
  }
  if (auto intent = with_article(summarize_re, Capability::Summarize)) return *intent;
  if (std::regex_match(original, m, summarize_text_re)) {
    return Intent{Capability::Summarize, std::nullopt, std::nullopt, std::nullopt, trim(m[1].str())};
  }
  if (std::regex_search(text, fact_re)) return Intent{Capability::FactCheck, {}, {}, {}, {}};
  if (std::regex_search(text, industry_re)) return Intent{Capability::IndustryPrediction, {}, {}, {}, {}};
  return Intent{};
}

JsonlAppender::JsonlAppender(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  out_.open(path_, std::ios::app);
  if (!out_) throw std::runtime_error("cannot open log " + path_.string());
}

void JsonlAppender::append(const json& record) {
  const std::string line = record.dump(-1, ' ', false, json::error_handler_t::replace);
  std::lock_guard lock(mutex_);
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("write to " + path_.string() + " failed");
}

void JsonlAppender::flush() {
  std::lock_guard lock(mutex_);
  out_.flush();
}

std::int64_t unix_millis() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string random_uuid() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  std::uint64_t hi = rng();
  std::uint64_t lo = rng();
  hi = (hi & ~0xF000ULL) | 0x4000ULL;                  // version 4
  lo = (lo & ~(0xC0ULL << 56)) | (0x80ULL << 56);      // RFC 4122 variant
  char buf[37];
  std::snprintf(buf, sizeof buf, "%08x-%04x-%04x-%04x-%012llx", static_cast<unsigned>(hi >> 32),
                static_cast<unsigned>((hi >> 16) & 0xFFFF), static_cast<unsigned>(hi & 0xFFFF),
                static_cast<unsigned>(lo >> 48), static_cast<unsigned long long>(lo & 0xFFFFFFFFFFFFULL));
  return buf;
}

Orchestrator::Orchestrator(SharedGraph& graph, rbac::Policy policy, OrchestratorConfig config, Clock clock,
                           IdGenerator ids)
    : graph_(graph), policy_(std::move(policy)), config_(std::move(config)), clock_(std::move(clock)),
      ids_(std::move(ids)) {
  config_.backend.check();
  if (config_.audit_log) {
    std::ifstream in(*config_.audit_log);
    std::string line;
    while (std::getline(in, line)) {
      json record = json::parse(line, nullptr, false);
      if (record.is_object() && record.contains("turn")) {
        turns_.insert(record["turn"].value("turn_id", std::string()));
      }
    }
    audit_.emplace(*config_.audit_log);
  }
  if (config_.feedback_log) {
    for (auto& r : read_feedback_log(*config_.feedback_log)) feedback_[r.turn_id].push_back(std::move(r));
    feedback_log_.emplace(*config_.feedback_log);
  }
}

ChatTurn Orchestrator::make_turn(std::string session_id, std::string user_message) {
  return ChatTurn{ids_(), std::move(session_id), std::move(user_message), clock_()};
}

ChatResponse Orchestrator::chat(std::string session_id, std::string message, std::string_view token) {
  return handle_turn(make_turn(std::move(session_id), std::move(message)), token);
}

ChatResponse Orchestrator::handle_turn(const ChatTurn& turn, std::string_view token) {
  const rbac::Principal principal = rbac::authenticate(token, policy_);

  Dispatch result;
  try {
    Explanation explanation;
    explanation.intent = route_prompt(turn.user_message);
    explanation.rbac = rbac::authorize(principal, explanation.intent.capability, policy_);
    if (!explanation.rbac.granted()) {
      result = {"Access denied: " + explanation.rbac.reason + ".", std::move(explanation)};
    } else {
      result = dispatch(turn, principal, std::move(explanation));
    }
  } catch (const std::exception& e) {
    throw InternalError(std::string("turn failed: ") + e.what());
  }

  ChatResponse response{turn.turn_id, std::move(result.reply), std::move(result.explanation)};
  {
    std::lock_guard lock(state_mutex_);
    turns_.insert(turn.turn_id);
    ++handled_;
  }
  remember(turn, response.reply);
  if (audit_) audit_->append({{"turn", turn}, {"response", response}});
  return response;
}

Orchestrator::Dispatch Orchestrator::dispatch(const ChatTurn& turn, const rbac::Principal& principal,
                                              Explanation explanation) {
  switch (explanation.intent.capability) {
    case Capability::GenericResponse:
    case Capability::Summarize:
      if (explanation.intent.capability == Capability::Summarize && explanation.intent.article_id &&
          !rbac::labels_of(principal, policy_).contains("Article")) {
        explanation.anomalies.push_back("role cannot read Article nodes");
        return {"Your role cannot read article content, so there is nothing to summarize.", std::move(explanation)};
      }
      return run_llm_only(turn, std::move(explanation));
    case Capability::SimilarArticles:
    case Capability::SentimentLookup:
    case Capability::TopicPrediction:
      return run_kg(cvl_policy_for(principal, policy_, config_.cvl), std::move(explanation));
    case Capability::RawCypher: return run_raw_cypher(principal, std::move(explanation));
    case Capability::FactCheck:
    case Capability::IndustryPrediction:
      return {unsupported_reply(explanation.intent.capability), std::move(explanation)};
  }
  throw std::logic_error("unhandled capability");
}

Orchestrator::Dispatch Orchestrator::run_llm_only(const ChatTurn& turn, Explanation explanation) {
  llm::LlmRequest request;
  request.system = std::string(kSystemPrompt);
  const Intent& intent = explanation.intent;
  if (intent.capability == Capability::Summarize) {
    std::string text = intent.query_text;
    if (intent.article_id) {
      auto view = graph_.read();
      const Node* article = view->find_article(*intent.article_id);
      if (!article) {
        explanation.anomalies.push_back("article " + std::to_string(*intent.article_id) + " does not exist");
        return {"Article " + std::to_string(*intent.article_id) + " does not exist in the knowledge graph.",
                std::move(explanation)};
      }
      const PropertyValue* content = article->property("content");
      text = content && content->is_text() ? content->as_text() : std::string();
    }
    request.messages.push_back({"user", llm::summarize_prompt(text)});
  } else {
    request.messages = history_for(turn.session_id);
    request.messages.push_back({"user", turn.user_message});
  }
  try {
    return {llm::complete(request, config_.backend).text, std::move(explanation)};
  } catch (const llm::LlmError& e) {
    explanation.anomalies.push_back("language model unavailable (" + std::string(llm::to_string(e.kind())) +
                                    "): " + e.what());
    return {"The language model backend is unavailable right now; please try again later.", std::move(explanation)};
  }
}

std::string Orchestrator::render(const Intent& intent, const cypher::ResultTable& rows,
                                 std::vector<std::string>& anomalies) {
  llm::LlmRequest request;
  request.system = std::string(kSystemPrompt);
  request.messages.push_back({"user", llm::format_insights_prompt(intent, rows)});
  try {
    return llm::complete(request, config_.backend).text;
  } catch (const llm::LlmError& e) {
    anomalies.push_back("language model unavailable (" + std::string(llm::to_string(e.kind())) +
                        "), rows rendered directly: " + e.what());
    return llm::render_insights(intent, rows);
  }
}

Orchestrator::Dispatch Orchestrator::run_kg(const cypher::CvlPolicy& cvl, Explanation explanation) {
  const Intent& intent = explanation.intent;
  const std::int64_t id = *intent.article_id;
  std::string text;
  switch (intent.capability) {
    case Capability::SimilarArticles:
      text = kg::similar_articles_query(id, intent.k.value_or(kg::kDefaultSimilarK));
      break;
    case Capability::SentimentLookup: text = kg::sentiment_query(id); break;
    default: text = kg::topic_prediction_query(id, intent.threshold.value_or(kg::kDefaultTopicThreshold)); break;
  }

  auto view = graph_.read();
  cypher::QueryRun run;
  try {
    run = cypher::run_query(text, *view, cvl);
  } catch (const cypher::EvalError& e) {
    auto screened = cypher::screen(text, cvl);
    explanation.cypher_text = cypher::unparse(*screened.ast);
    explanation.validation = std::move(screened.report);
    const std::string kind = e.kind() == cypher::EvalError::Kind::DimensionMismatch ? "dimension mismatch" : "evaluation error";
    explanation.anomalies.push_back(kind + ": " + e.what());
    return {"The knowledge-graph query could not be completed (" + kind + ").", std::move(explanation)};
  }

  explanation.cypher_text = run.ast ? cypher::unparse(*run.ast) : text;
  explanation.validation = run.report;
  if (!run.report.accepted()) {
    explanation.anomalies.push_back("template query rejected by the validation layer: " +
                                    violations_text(run.report));
    return {"The knowledge-graph query was rejected for your role: " + violations_text(run.report) + ".",
            std::move(explanation)};
  }
  cypher::ResultTable rows = std::move(*run.table);

  const bool exists = view->find_article(id) != nullptr;
  if (!exists) explanation.anomalies.push_back("article " + std::to_string(id) + " does not exist");
  if (rows.rows.empty()) explanation.anomalies.push_back("empty result: the query matched no rows");
  if (has_non_finite(rows)) explanation.anomalies.push_back("non-finite score in the result rows");
  if (rows.truncated && run.report.limit_injected) {
    explanation.anomalies.push_back("result truncated at the injected limit of " +
                                    std::to_string(run.report.effective_limit) + " rows");
  }

  std::string reply;
  if (!exists) {
    reply = "Article " + std::to_string(id) + " does not exist in the knowledge graph.";
  } else if (rows.rows.empty() && intent.capability == Capability::TopicPrediction) {
    const double threshold = intent.threshold.value_or(kg::kDefaultTopicThreshold);
    reply = "No topic prediction for article " + std::to_string(id) + ": no article with a topic is more similar than " +
            format_fixed(threshold, 2);
    std::optional<double> best;
    try {
      best = kg::best_topic_candidate_score(*view, id, cvl);
    } catch (const std::exception&) {
    }
    reply += best ? " (max similarity " + format_fixed(*best, 2) + ")." : ".";
  } else {
    reply = render(intent, rows, explanation.anomalies);
  }
  explanation.rows = std::move(rows);
  return {std::move(reply), std::move(explanation)};
}

Orchestrator::Dispatch Orchestrator::run_raw_cypher(const rbac::Principal& principal, Explanation explanation) {
  const auto cvl = cvl_policy_for(principal, policy_, config_.cvl);
  const std::string& text = explanation.intent.query_text;
  auto view = graph_.read();
  cypher::QueryRun run;
  try {
    run = cypher::run_query(text, *view, cvl);
  } catch (const cypher::EvalError& e) {
    auto screened = cypher::screen(text, cvl);
    explanation.cypher_text = cypher::unparse(*screened.ast);
    explanation.validation = std::move(screened.report);
    const std::string kind = e.kind() == cypher::EvalError::Kind::DimensionMismatch ? "dimension mismatch" : "evaluation error";
    explanation.anomalies.push_back(kind + ": " + e.what());
    return {"The query could not be completed (" + kind + "): " + e.what(), std::move(explanation)};
  }
  explanation.validation = run.report;
  if (!run.report.accepted()) {
    explanation.cypher_text = text;
    return {"Query rejected by the validation layer: " + violations_text(run.report) + ".", std::move(explanation)};
  }
  explanation.cypher_text = cypher::unparse(*run.ast);
  cypher::ResultTable rows = std::move(*run.table);
  if (rows.rows.empty()) explanation.anomalies.push_back("empty result: the query matched no rows");
  if (has_non_finite(rows)) explanation.anomalies.push_back("non-finite value in the result rows");
  if (rows.truncated && run.report.limit_injected) {
    explanation.anomalies.push_back("result truncated at the injected limit of " +
                                    std::to_string(run.report.effective_limit) + " rows");
  }
  std::string reply = render(explanation.intent, rows, explanation.anomalies);
  explanation.rows = std::move(rows);
  return {std::move(reply), std::move(explanation)};
}

std::vector<llm::ChatMessage> Orchestrator::history_for(const std::string& session_id) const {
  std::lock_guard lock(state_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return {};
  return it->second;
}

void Orchestrator::remember(const ChatTurn& turn, const std::string& reply) {
  std::lock_guard lock(state_mutex_);
  auto& history = sessions_[turn.session_id];
  history.push_back({"user", turn.user_message});
  history.push_back({"assistant", reply});
  while (history.size() > config_.history_limit) history.erase(history.begin());
  // Keep the history starting with a user message.
  if (!history.empty() && history.front().role != "user") history.erase(history.begin());
}

void Orchestrator::record_feedback(const FeedbackRecord& record) {
  {
    std::lock_guard lock(state_mutex_);
    if (!turns_.contains(record.turn_id)) throw UnknownTurn(record.turn_id);
    feedback_[record.turn_id].push_back(record);
  }
  if (feedback_log_) feedback_log_->append(record);
}

std::vector<FeedbackRecord> Orchestrator::feedback_for(std::string_view turn_id) const {
  std::lock_guard lock(state_mutex_);
  auto it = feedback_.find(turn_id);
  return it == feedback_.end() ? std::vector<FeedbackRecord>{} : it->second;
}

std::size_t Orchestrator::handled_turns() const {
  std::lock_guard lock(state_mutex_);
  return handled_;
}

void Orchestrator::flush() {
  if (audit_) audit_->flush();
  if (feedback_log_) feedback_log_->flush();
}

}  // namespace kgchat::orch
