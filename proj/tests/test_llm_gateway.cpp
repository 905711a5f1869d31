#include <chrono>
#include <cstdlib>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "kgchat/llm_gateway.hpp"
#include "support.hpp"

namespace kgchat::llm {
namespace {

Intent intent_of(Capability c, std::optional<std::int64_t> article_id = {}) {
  Intent i;
  i.capability = c;
  i.article_id = article_id;
  return i;
}

LlmRequest user_says(std::string text) { return {"", {{"user", std::move(text)}}, 0.0, 512}; }

LlmError::Kind error_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const LlmError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no LlmError thrown";
  return LlmError::Kind::InvalidRequest;
}

// A chat-completions stand-in on a free local port.
class StubServer {
 public:
  explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat/completions", [this, handler](const httplib::Request& req, httplib::Response& res) {
      last_body_ = req.body;
      handler(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  BackendConfig config(std::int64_t timeout_ms = 2000) const {
    return {BackendMode::Http, "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions", "stub-model",
            timeout_ms};
  }
  const std::string& last_body() const { return last_body_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::string last_body_;
};

std::string canned(std::string_view content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

TEST(MockBackendTest, SummarizeKeepsTwoSentences) {
  const std::string text = "Robots learn fast. Labs publish weekly.\n  Investors are cautious.";
  const auto reply = mock_reply(user_says(summarize_prompt(text)));
  EXPECT_EQ(reply, "Summary: Robots learn fast. Labs publish weekly.");
  EXPECT_EQ(mock_reply(user_says(summarize_prompt(""))), "Summary: there is no text to summarize.");
}

TEST(MockBackendTest, IsDeterministic) {
  for (const auto& prompt : {summarize_prompt("One. Two. Three."), std::string("hello there"),
                             format_insights_prompt(intent_of(Capability::SentimentLookup, 100), {})}) {
    EXPECT_EQ(mock_reply(user_says(prompt)), mock_reply(user_says(prompt)));
    EXPECT_EQ(complete(user_says(prompt), {}).text, mock_reply(user_says(prompt)));
  }
  EXPECT_EQ(complete(user_says("x"), {}).backend, "mock");
}

TEST(MockBackendTest, GenericEcho) {
  EXPECT_TRUE(mock_reply(user_says("hello there")).starts_with("I can help with AI news questions"));
}

TEST(MockBackendTest, FormatPromptRendersLikeTheFallback) {
  auto intent = intent_of(Capability::SimilarArticles, 100);
  intent.k = 5;
  const cypher::ResultTable rows{{"similarity_score", "a1.article_id", "a2.article_id"},
                                 {{0.974, 100, 7}, {0.5, 100, 9}},
                                 false};
  EXPECT_EQ(mock_reply(user_says(format_insights_prompt(intent, rows))), render_insights(intent, rows));
}

TEST(RenderInsightsTest, Templates) {
  const cypher::ResultTable similar{{"similarity_score", "a1.article_id", "a2.article_id"},
                                    {{0.97, 100, 12}, {0.9449, 100, 3}},
                                    false};
  EXPECT_EQ(render_insights(intent_of(Capability::SimilarArticles, 100), similar),
            "Top similar articles: #12 (score 0.97), #3 (score 0.94).");
  const cypher::ResultTable sentiment{{"n.sentiment", "n.compound"}, {{"positive", 0.4404}}, false};
  EXPECT_EQ(render_insights(intent_of(Capability::SentimentLookup, 100), sentiment),
            "Article 100 sentiment: positive (compound 0.44).");
  const cypher::ResultTable topic{{"similar_article", "predicted_topic", "similarity_score"},
                                  {{200, "Robotics", 0.99}},
                                  false};
  EXPECT_EQ(render_insights(intent_of(Capability::TopicPrediction, 100), topic),
            "Predicted topic for article 100: Robotics (via article 200, similarity 0.99).");
  EXPECT_EQ(render_insights(intent_of(Capability::SimilarArticles, 100), {{"x"}, {}, false}), kNoDataMessage);
}

TEST(RenderInsightsTest, GenericRowsAreLabeled) {
  const cypher::ResultTable rows{{"a.title", "a.compound"}, {{"alpha", 0.5}, {PropertyValue(), -1.0}}, false};
  EXPECT_EQ(render_insights(intent_of(Capability::RawCypher), rows),
            "Query returned 2 rows:\na.title: alpha, a.compound: 0.5\na.title: null, a.compound: -1.0");
}

TEST(LeadingSentencesTest, Rules) {
  EXPECT_EQ(leading_sentences("A b.  C d!\nE f? G", 2), "A b. C d!");
  EXPECT_EQ(leading_sentences("No terminator here", 2), "No terminator here");
  EXPECT_EQ(leading_sentences("Version 2.5 shipped. Then more.", 1), "Version 2.5 shipped.");
  EXPECT_EQ(leading_sentences("", 2), "");
}

TEST(CheckRequestTest, Errors) {
  EXPECT_EQ(error_kind([] { check_request({}); }), LlmError::Kind::InvalidRequest);
  EXPECT_EQ(error_kind([] { check_request({"", {{"system", "x"}}}); }), LlmError::Kind::InvalidRequest);
  EXPECT_EQ(error_kind([] { check_request({"", {{"user", "x"}, {"assistant", "y"}}}); }),
            LlmError::Kind::InvalidRequest);
  EXPECT_EQ(error_kind([] { check_request({"", {{"user", "x"}}, -0.1}); }), LlmError::Kind::InvalidRequest);
  EXPECT_NO_THROW(check_request({"sys", {{"user", "a"}, {"assistant", "b"}, {"user", "c"}}, 0.7}));
}

TEST(BackendConfigTest, Check) {
  EXPECT_NO_THROW(BackendConfig{}.check());
  EXPECT_THROW((BackendConfig{BackendMode::Http, "", "m"}.check()), std::invalid_argument);
  EXPECT_THROW((BackendConfig{BackendMode::Http, "http://x", ""}.check()), std::invalid_argument);
  EXPECT_THROW((BackendConfig{BackendMode::Mock, "", "", 0}.check()), std::invalid_argument);
}

TEST(BackendConfigTest, FromEnv) {
  ::setenv("KGCHAT_LLM_MODE", "http", 1);
  ::setenv("KGCHAT_LLM_URL", "http://127.0.0.1:9/v1", 1);
  ::setenv("KGCHAT_LLM_MODEL", "local-model", 1);
  const auto c = BackendConfig::from_env();
  EXPECT_EQ(c.mode, BackendMode::Http);
  EXPECT_EQ(c.endpoint, "http://127.0.0.1:9/v1");
  EXPECT_EQ(c.model, "local-model");
  ::unsetenv("KGCHAT_LLM_MODEL");
  EXPECT_THROW(BackendConfig::from_env(), std::invalid_argument);
  ::setenv("KGCHAT_LLM_MODE", "carrier-pigeon", 1);
  EXPECT_THROW(BackendConfig::from_env(), std::invalid_argument);
  ::unsetenv("KGCHAT_LLM_MODE");
  ::unsetenv("KGCHAT_LLM_URL");
  EXPECT_EQ(BackendConfig::from_env().mode, BackendMode::Mock);
}

TEST(HttpBackendTest, ReturnsCannedChoice) {
  StubServer stub([](const httplib::Request&, httplib::Response& res) {
    res.set_content(canned("Canned answer."), "application/json");
  });
  LlmRequest req{"be brief", {{"user", "hi"}, {"assistant", "hello"}, {"user", "news?"}}, 0.2, 64};
  const auto r = complete(req, stub.config());
  EXPECT_EQ(r.text, "Canned answer.");
  EXPECT_EQ(r.backend, "http");
  const auto sent = nlohmann::json::parse(stub.last_body());
  EXPECT_EQ(sent["model"], "stub-model");
  EXPECT_EQ(sent["max_tokens"], 64);
  ASSERT_EQ(sent["messages"].size(), 4u);
  EXPECT_EQ(sent["messages"][0], (nlohmann::json{{"role", "system"}, {"content", "be brief"}}));
  EXPECT_EQ(sent["messages"][3]["content"], "news?");
}

TEST(HttpBackendTest, MalformedReplies) {
  for (const std::string body : {"not json", R"({"choices":[]})", R"({"choices":[{"message":{"content":""}}]})",
                                 R"({"choices":[{"message":{"content":7}}]})"}) {
    StubServer stub([&](const httplib::Request&, httplib::Response& res) { res.set_content(body, "application/json"); });
    EXPECT_EQ(error_kind([&] { http_complete(user_says("q"), stub.config()); }), LlmError::Kind::MalformedReply)
        << body;
  }
}

TEST(HttpBackendTest, Non200IsTransportError) {
  StubServer stub([](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
    res.set_content(canned("ignored"), "application/json");
  });
  EXPECT_EQ(error_kind([&] { http_complete(user_says("q"), stub.config()); }), LlmError::Kind::Transport);
}

TEST(HttpBackendTest, UnreachableAndUnsupportedEndpoints) {
  // Bind then release a port so nothing listens on it.
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  BackendConfig c{BackendMode::Http, "http://127.0.0.1:" + std::to_string(port) + "/v1", "m", 1000};
  const auto kind = error_kind([&] { http_complete(user_says("q"), c); });
  EXPECT_TRUE(kind == LlmError::Kind::Transport || kind == LlmError::Kind::Timeout);
  c.endpoint = "https://example.invalid/v1";
  EXPECT_EQ(error_kind([&] { http_complete(user_says("q"), c); }), LlmError::Kind::Transport);
}

TEST(HttpBackendTest, NeverBlocksPastTimeout) {
  // The stub trickles its reply so no single socket read times out.
  StubServer stub([](const httplib::Request&, httplib::Response& res) {
    res.set_chunked_content_provider("application/json", [](std::size_t offset, httplib::DataSink& sink) {
      if (offset >= 40) {
        sink.done();
        return true;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      sink.write(" ", 1);
      return true;
    });
  });
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(error_kind([&] { http_complete(user_says("q"), stub.config(300)); }), LlmError::Kind::Timeout);
  const auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(elapsed, 300 + 250);
}

}  // namespace
}  // namespace kgchat::llm
