#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgchat/capability.hpp"

namespace kgchat::rbac {

struct Role {
  std::string name;
  std::set<Capability> capabilities;
  std::set<std::string, std::less<>> labels;  // readable node labels

  friend bool operator==(const Role&, const Role&) = default;
};

struct Principal {
  std::string user_id;
  std::vector<std::string> roles;

  friend bool operator==(const Principal&, const Principal&) = default;
};

enum class Verdict { Grant, Deny };

std::string_view to_string(Verdict v);

struct AccessDecision {
  Verdict verdict = Verdict::Deny;
  std::optional<std::string> role_used;
  std::string reason;

  bool granted() const { return verdict == Verdict::Grant; }
  friend bool operator==(const AccessDecision&, const AccessDecision&) = default;
};

void to_json(nlohmann::json& j, const AccessDecision& d);

class PolicyError : public std::runtime_error {
 public:
  enum class Code { FormatError, UnknownCapabilityName, IoFailure };
  PolicyError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

class InvalidToken : public std::runtime_error {
 public:
  InvalidToken() : std::runtime_error("invalid token") {}
};

/// Roles plus the bearer-token table. Immutable once built.
class Policy {
 public:
  /// admin (every capability), analyst (KG capabilities, Summarize,
  /// GenericResponse), guest (GenericResponse, Summarize); tokens
  /// t-admin-1, t-analyst-1 and t-guest-1.
  static Policy defaults();
  static Policy from_json(const nlohmann::json& doc);
  static Policy load(const std::filesystem::path& path);

  nlohmann::json to_json() const;

  const Role* role(std::string_view name) const;
  const std::map<std::string, Role, std::less<>>& roles() const { return roles_; }
  const std::map<std::string, Principal, std::less<>>& tokens() const { return tokens_; }

  friend bool operator==(const Policy&, const Policy&) = default;

 private:
  std::map<std::string, Role, std::less<>> roles_;
  std::map<std::string, Principal, std::less<>> tokens_;
};

Principal authenticate(std::string_view token, const Policy& policy);

/// Grant iff some role of the principal lists the capability; the first such
/// role (in the principal's order) is reported.
AccessDecision authorize(const Principal& principal, Capability capability, const Policy& policy);

/// Union of capabilities over the principal's roles.
std::set<Capability> capabilities_of(const Principal& principal, const Policy& policy);

/// Union of readable labels over the principal's roles.
std::set<std::string, std::less<>> labels_of(const Principal& principal, const Policy& policy);

}  // namespace kgchat::rbac
