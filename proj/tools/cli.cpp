#include "cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "kgchat/capabilities.hpp"
#include "kgchat/cypher/evaluator.hpp"
#include "kgchat/graph_store.hpp"
#include "kgchat/ingest.hpp"
#include "kgchat/llm_gateway.hpp"
#include "kgchat/orchestrator.hpp"
#include "kgchat/rbac.hpp"
#include "kgchat/service.hpp"

namespace kgchat::cli {

namespace {

struct Options {
  std::string input;
  std::string snapshot;
  std::size_t dimension = 64;
  std::string lexicon = KGCHAT_DEFAULT_LEXICON;
  std::string cypher_text;
  std::string role = "admin";
  std::string policy;
  std::int64_t max_limit = 100;
  std::int64_t id = 0;
  std::int64_t k = kg::kDefaultSimilarK;
  double threshold = kg::kDefaultTopicThreshold;
  bool explain = false;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string audit_log = "kgchat-audit.jsonl";
  std::string feedback_log = "kgchat-feedback.jsonl";
};

rbac::Policy load_policy(const std::string& path) {
  return path.empty() ? rbac::Policy::defaults() : rbac::Policy::load(path);
}

cypher::CvlPolicy cvl_with_limit(std::int64_t max_limit) {
  cypher::CvlPolicy cvl;
  cvl.max_limit = max_limit;
  return cvl;
}

int cmd_ingest(const Options& o, std::ostream& out) {
  const auto articles = ingest::read_jsonl(o.input);
  const auto lexicon = ingest::Lexicon::load(o.lexicon);
  const Graph graph = ingest::build_graph(articles, o.dimension, lexicon);
  graph.save_snapshot(o.snapshot);
  out << "ingested " << graph.article_count() << " articles, " << graph.topic_count() << " topics, "
      << graph.edges().size() << " edges\n";
  return 0;
}

int cmd_query(const Options& o, std::ostream& out, std::ostream& err) {
  const rbac::Policy policy = load_policy(o.policy);
  if (!policy.role(o.role)) {
    err << "unknown role '" << o.role << "'\n";
    return 1;
  }
  const rbac::Principal principal{"cli", {o.role}};
  const auto decision = rbac::authorize(principal, Capability::RawCypher, policy);
  if (!decision.granted()) {
    err << decision.reason << "\n";
    return 3;
  }
  const Graph graph = Graph::load_snapshot(o.snapshot);
  const auto cvl = orch::cvl_policy_for(principal, policy, cvl_with_limit(o.max_limit));
  const auto run = cypher::run_query(o.cypher_text, graph, cvl);
  if (!run.report.accepted()) {
    out << "query rejected:\n";
    for (const auto& v : run.report.violations) {
      out << "  " << v.code << " at offset " << v.offset << ": " << v.message << "\n";
    }
    return 2;
  }
  out << cypher::format_table(*run.table);
  if (run.report.limit_injected) out << "(LIMIT " << run.report.effective_limit << " applied)\n";
  return 0;
}

void explain(const kg::CapabilityRun& run, std::ostream& out) { out << "cypher: " << run.cypher_text << "\n"; }

int cmd_similar(const Options& o, std::ostream& out) {
  const Graph graph = Graph::load_snapshot(o.snapshot);
  const auto result = kg::find_similar(graph, o.id, o.k, cvl_with_limit(o.max_limit));
  for (const auto& a : result.articles) out << "article " << a.article_id << "  score " << format_fixed(a.score, 6) << "\n";
  if (o.explain) explain(result.run, out);
  return 0;
}

int cmd_sentiment(const Options& o, std::ostream& out) {
  const Graph graph = Graph::load_snapshot(o.snapshot);
  const auto result = kg::get_sentiment(graph, o.id, cvl_with_limit(o.max_limit));
  out << "article " << o.id << " sentiment: " << result.sentiment.label << " (compound "
      << format_double(result.sentiment.compound) << ")\n";
  if (o.explain) explain(result.run, out);
  return 0;
}

int cmd_topic(const Options& o, std::ostream& out) {
  const Graph graph = Graph::load_snapshot(o.snapshot);
  const auto cvl = cvl_with_limit(o.max_limit);
  const auto result = kg::predict_topic(graph, o.id, o.threshold, cvl);
  if (result.prediction) {
    out << "predicted topic: " << result.prediction->topic_name << " (via article " << result.prediction->via_article
        << ", similarity " << format_fixed(result.prediction->score, 6) << ")\n";
  } else if (auto best = kg::best_topic_candidate_score(graph, o.id, cvl)) {
    out << "no topic prediction (max similarity " << format_fixed(*best, 2) << " ≤ " << format_double(o.threshold)
        << ")\n";
  } else {
    out << "no topic prediction (no other article carries a topic)\n";
  }
  if (o.explain) explain(result.run, out);
  return 0;
}

int cmd_serve(const Options& o, std::ostream& out, std::ostream& err) {
  service::ServiceConfig config;
  config.host = o.host;
  config.port = o.port;
  config.snapshot_path = o.snapshot;
  if (!o.policy.empty()) config.policy_path = o.policy;
  config.backend = llm::BackendConfig::from_env();
  config.max_limit = o.max_limit;
  config.dimension = o.dimension;
  config.audit_log = o.audit_log;
  config.feedback_log = o.feedback_log;
  config.check();

  SharedGraph graph(Graph::load_snapshot(config.snapshot_path));
  if (graph.read()->dimension() != config.dimension) {
    err << "snapshot dimension " << graph.read()->dimension() << " does not match --dimension " << config.dimension
        << "\n";
    return 1;
  }
  orch::OrchestratorConfig oc;
  oc.backend = config.backend;
  oc.cvl = cvl_with_limit(config.max_limit);
  oc.audit_log = config.audit_log;
  oc.feedback_log = config.feedback_log;
  orch::Orchestrator orchestrator(graph, load_policy(o.policy), oc);
  service::Service svc(orchestrator);

  // Signals are taken synchronously by a dedicated thread; the mask is set
  // before the server spawns its workers so they inherit it.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  const int port = svc.bind(config.host, config.port);
  out << "listening on http://" << config.host << ":" << port << " (" << graph.read()->article_count()
      << " articles)" << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    svc.stop();
  });
  svc.run();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  out << "shut down" << std::endl;
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Knowledge-graph chat service over an AI news corpus", "kgchat"};
  app.require_subcommand(1);

  auto* ingest_cmd = app.add_subcommand("ingest", "Build a graph snapshot from a JSON Lines corpus");
  ingest_cmd->add_option("--input", o.input, "Input JSON Lines file")->required();
  ingest_cmd->add_option("--snapshot", o.snapshot, "Snapshot file to write")->required();
  ingest_cmd->add_option("--dimension", o.dimension, "Embedding dimension")->check(CLI::Range(2, 1 << 16));
  ingest_cmd->add_option("--lexicon", o.lexicon, "Sentiment lexicon (term<TAB>valence)");

  auto* query_cmd = app.add_subcommand("query", "Validate and run a read-only query");
  query_cmd->add_option("--snapshot", o.snapshot, "Graph snapshot")->required();
  query_cmd->add_option("--cypher", o.cypher_text, "Query text")->required();
  query_cmd->add_option("--role", o.role, "Role to run the query as");
  query_cmd->add_option("--policy", o.policy, "RBAC policy file")->envname("KGCHAT_POLICY");
  query_cmd->add_option("--max-limit", o.max_limit, "Largest LIMIT accepted")->check(CLI::PositiveNumber);

  auto add_lookup = [&](const char* name, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--snapshot", o.snapshot, "Graph snapshot")->required();
    cmd->add_option("--id", o.id, "Article id")->required();
    cmd->add_option("--max-limit", o.max_limit, "Largest LIMIT accepted")->check(CLI::PositiveNumber);
    cmd->add_flag("--explain", o.explain, "Also print the executed query");
    return cmd;
  };
  auto* similar_cmd = add_lookup("similar", "Most similar articles");
  similar_cmd->add_option("--k", o.k, "Number of results")->check(CLI::PositiveNumber);
  auto* sentiment_cmd = add_lookup("sentiment", "Stored sentiment of an article");
  auto* topic_cmd = add_lookup("topic", "Topic prediction from the most similar article");
  topic_cmd->add_option("--threshold", o.threshold, "Similarity threshold (strict)");

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  serve_cmd->add_option("--snapshot", o.snapshot, "Graph snapshot")->required();
  serve_cmd->add_option("--host", o.host, "Listen address");
  serve_cmd->add_option("--port", o.port, "Listen port")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--policy", o.policy, "RBAC policy file")->envname("KGCHAT_POLICY");
  serve_cmd->add_option("--max-limit", o.max_limit, "Largest LIMIT accepted")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--dimension", o.dimension, "Expected embedding dimension");
  serve_cmd->add_option("--audit-log", o.audit_log, "Audit log (JSON Lines)");
  serve_cmd->add_option("--feedback-log", o.feedback_log, "Feedback log (JSON Lines)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (ingest_cmd->parsed()) return cmd_ingest(o, out);
    if (query_cmd->parsed()) return cmd_query(o, out, err);
    if (similar_cmd->parsed()) return cmd_similar(o, out);
    if (sentiment_cmd->parsed()) return cmd_sentiment(o, out);
    if (topic_cmd->parsed()) return cmd_topic(o, out);
    if (serve_cmd->parsed()) return cmd_serve(o, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace kgchat::cli
