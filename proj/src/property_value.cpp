#include "kgchat/property_value.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace kgchat {

double PropertyValue::as_number() const {
  if (is_int()) return static_cast<double>(as_int());
  return as_float();
}

std::string_view PropertyValue::type_name() const {
  switch (value_.index()) {
    case 0: return "Null";
    case 1: return "Boolean";
    case 2: return "Integer";
    case 3: return "Float";
    case 4: return "Text";
    default: return "FloatVector";
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string out(buf, end);
  if (out.find_first_of(".e") == std::string::npos) out += ".0";
  return out;
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string PropertyValue::to_display() const {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "null";
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else {
          std::string out = "[";
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) out += ", ";
            out += format_double(x[i]);
          }
          return out + "]";
        }
      },
      value_);
}

void to_json(nlohmann::json& j, const PropertyValue& v) {
  std::visit(
      [&j](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          j = nullptr;
        } else {
          j = x;
        }
      },
      v.storage());
}

void from_json(const nlohmann::json& j, PropertyValue& v) {
  using nlohmann::json;
  switch (j.type()) {
    case json::value_t::null: v = PropertyValue(); return;
    case json::value_t::boolean: v = PropertyValue(j.get<bool>()); return;
    case json::value_t::number_integer: v = PropertyValue(j.get<std::int64_t>()); return;
    case json::value_t::number_unsigned: {
      auto u = j.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(INT64_MAX)) throw std::out_of_range("integer property out of range");
      v = PropertyValue(static_cast<std::int64_t>(u));
      return;
    }
    case json::value_t::number_float: v = PropertyValue(j.get<double>()); return;
    case json::value_t::string: v = PropertyValue(j.get<std::string>()); return;
    case json::value_t::array: {
      FloatVector out;
      out.reserve(j.size());
      for (const auto& e : j) {
        if (!e.is_number()) throw std::invalid_argument("vector property entries must be numbers");
        out.push_back(e.get<double>());
      }
      v = PropertyValue(std::move(out));
      return;
    }
    default: throw std::invalid_argument("unsupported JSON type for a property value");
  }
}

}  // namespace kgchat
