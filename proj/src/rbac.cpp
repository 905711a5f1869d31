#include "kgchat/rbac.hpp"

#include <fstream>

namespace kgchat::rbac {

std::string_view to_string(Verdict v) { return v == Verdict::Grant ? "Grant" : "Deny"; }

void to_json(nlohmann::json& j, const AccessDecision& d) {
  j = {{"verdict", to_string(d.verdict)}, {"reason", d.reason}};
  j["role_used"] = d.role_used ? nlohmann::json(*d.role_used) : nlohmann::json(nullptr);
}

namespace {

PolicyError format_error(const std::string& what) { return PolicyError(PolicyError::Code::FormatError, what); }

}  // namespace

Policy Policy::defaults() {
  Policy p;
  const std::set<std::string, std::less<>> all_labels{"Article", "Topic"};
  p.roles_["admin"] = Role{"admin", {kAllCapabilities.begin(), kAllCapabilities.end()}, all_labels};
  p.roles_["analyst"] = Role{"analyst",
                             {Capability::SimilarArticles, Capability::SentimentLookup, Capability::TopicPrediction,
                              Capability::Summarize, Capability::GenericResponse},
                             all_labels};
  p.roles_["guest"] = Role{"guest", {Capability::GenericResponse, Capability::Summarize}, {"Article"}};
  p.tokens_["t-admin-1"] = Principal{"admin1", {"admin"}};
  p.tokens_["t-analyst-1"] = Principal{"analyst1", {"analyst"}};
  p.tokens_["t-guest-1"] = Principal{"guest1", {"guest"}};
  return p;
}

Policy Policy::from_json(const nlohmann::json& doc) {
  Policy p;
  try {
    if (!doc.is_object()) throw format_error("policy must be a JSON object");
    for (const auto& jr : doc.at("roles")) {
      Role r;
      r.name = jr.at("name").get<std::string>();
      if (r.name.empty()) throw format_error("role name must not be empty");
      for (const auto& jc : jr.at("capabilities")) {
        const auto name = jc.get<std::string>();
        auto cap = parse_capability(name);
        if (!cap) throw PolicyError(PolicyError::Code::UnknownCapabilityName, "unknown capability '" + name + "'");
        r.capabilities.insert(*cap);
      }
      if (r.capabilities.empty()) throw format_error("role '" + r.name + "' grants no capabilities");
      if (jr.contains("labels")) {
        for (const auto& jl : jr.at("labels")) {
          auto label = jl.get<std::string>();
          if (label != "Article" && label != "Topic") throw format_error("unknown label '" + label + "'");
          r.labels.insert(std::move(label));
        }
      }
      if (p.roles_.contains(r.name)) throw format_error("duplicate role '" + r.name + "'");
      p.roles_.emplace(r.name, std::move(r));
    }
    if (doc.contains("tokens")) {
      for (const auto& [token, jp] : doc.at("tokens").items()) {
        if (token.empty()) throw format_error("empty token");
        Principal pr;
        pr.user_id = jp.at("user").get<std::string>();
        pr.roles = jp.at("roles").get<std::vector<std::string>>();
        if (pr.roles.empty()) throw format_error("token for '" + pr.user_id + "' has no roles");
        for (const auto& r : pr.roles) {
          if (!p.roles_.contains(r)) throw format_error("token for '" + pr.user_id + "' names unknown role '" + r + "'");
        }
        p.tokens_.emplace(token, std::move(pr));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("malformed policy: ") + e.what());
  }
  return p;
}

Policy Policy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PolicyError(PolicyError::Code::IoFailure, "cannot open policy " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw format_error(path.string() + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json Policy::to_json() const {
  nlohmann::json roles = nlohmann::json::array();
  for (const auto& [name, r] : roles_) {
    nlohmann::json caps = nlohmann::json::array();
    for (auto c : r.capabilities) caps.push_back(to_string(c));
    roles.push_back({{"name", name}, {"capabilities", caps}, {"labels", r.labels}});
  }
  nlohmann::json tokens = nlohmann::json::object();
  for (const auto& [token, pr] : tokens_) tokens[token] = {{"user", pr.user_id}, {"roles", pr.roles}};
  return {{"roles", roles}, {"tokens", tokens}};
}

const Role* Policy::role(std::string_view name) const {
  auto it = roles_.find(name);
  return it == roles_.end() ? nullptr : &it->second;
}

Principal authenticate(std::string_view token, const Policy& policy) {
  if (token.empty()) throw InvalidToken();
  auto it = policy.tokens().find(token);
  if (it == policy.tokens().end()) throw InvalidToken();
  return it->second;
}

AccessDecision authorize(const Principal& principal, Capability capability, const Policy& policy) {
  for (const auto& name : principal.roles) {
    const Role* r = policy.role(name);
    if (r && r->capabilities.contains(capability)) {
      return {Verdict::Grant, name, "role '" + name + "' grants " + std::string(to_string(capability))};
    }
  }
  std::string roles;
  for (const auto& name : principal.roles) roles += (roles.empty() ? "" : ", ") + name;
  return {Verdict::Deny, std::nullopt,
          "role(s) " + roles + " do not grant the " + std::string(to_string(capability)) + " capability"};
}

std::set<Capability> capabilities_of(const Principal& principal, const Policy& policy) {
  std::set<Capability> out;
  for (const auto& name : principal.roles) {
    if (const Role* r = policy.role(name)) out.insert(r->capabilities.begin(), r->capabilities.end());
  }
  return out;
}

std::set<std::string, std::less<>> labels_of(const Principal& principal, const Policy& policy) {
  std::set<std::string, std::less<>> out;
  for (const auto& name : principal.roles) {
    if (const Role* r = policy.role(name)) out.insert(r->labels.begin(), r->labels.end());
  }
  return out;
}

}  // namespace kgchat::rbac
