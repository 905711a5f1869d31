#pragma once

#include <concepts>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace kgchat {

using FloatVector = std::vector<double>;

/// A single property cell: Null, Boolean, Integer, Float, Text or FloatVector.
class PropertyValue {
 public:
  using Storage = std::variant<std::monostate, bool, std::int64_t, double, std::string, FloatVector>;

  PropertyValue() = default;
  PropertyValue(std::nullptr_t) {}
  PropertyValue(bool v) : value_(v) {}
  template <std::integral T>
    requires(!std::same_as<T, bool>)
  PropertyValue(T v) : value_(static_cast<std::int64_t>(v)) {}
  PropertyValue(double v) : value_(v) {}
  PropertyValue(std::string v) : value_(std::move(v)) {}
  PropertyValue(std::string_view v) : value_(std::string(v)) {}
  PropertyValue(const char* v) : value_(std::string(v)) {}
  PropertyValue(FloatVector v) : value_(std::move(v)) {}

  bool is_null() const { return std::holds_alternative<std::monostate>(value_); }
  bool is_bool() const { return std::holds_alternative<bool>(value_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(value_); }
  bool is_float() const { return std::holds_alternative<double>(value_); }
  bool is_number() const { return is_int() || is_float(); }
  bool is_text() const { return std::holds_alternative<std::string>(value_); }
  bool is_vector() const { return std::holds_alternative<FloatVector>(value_); }

  bool as_bool() const { return std::get<bool>(value_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(value_); }
  double as_float() const { return std::get<double>(value_); }
  /// Integer or Float widened to double.
  double as_number() const;
  const std::string& as_text() const { return std::get<std::string>(value_); }
  const FloatVector& as_vector() const { return std::get<FloatVector>(value_); }

  const Storage& storage() const { return value_; }

  /// "Null", "Boolean", "Integer", "Float", "Text" or "FloatVector".
  std::string_view type_name() const;

  /// Display form used in tables and logs. Floats use shortest round-trip form.
  std::string to_display() const;

  friend bool operator==(const PropertyValue&, const PropertyValue&) = default;

 private:
  Storage value_;
};

using PropertyMap = std::map<std::string, PropertyValue, std::less<>>;

/// Shortest decimal string that parses back to exactly `v`; always carries a
/// '.' or exponent so it re-reads as a Float.
std::string format_double(double v);

/// Fixed-point rendering with `digits` decimals.
std::string format_fixed(double v, int digits);

void to_json(nlohmann::json& j, const PropertyValue& v);
void from_json(const nlohmann::json& j, PropertyValue& v);

}  // namespace kgchat
