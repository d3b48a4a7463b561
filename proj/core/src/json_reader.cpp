#include "json_reader.hpp"

#include <limits>

#include <fmt/format.h>

namespace psyrig::detail {

std::string join_path(std::string_view parent, std::string_view key) {
  if (parent.empty()) return std::string(key);
  return fmt::format("{}.{}", parent, key);
}

std::string index_path(std::string_view parent, std::size_t i) {
  return fmt::format("{}[{}]", parent, i);
}

const char* type_name(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return "null";
    case json::value_t::object: return "object";
    case json::value_t::array: return "array";
    case json::value_t::string: return "string";
    case json::value_t::boolean: return "boolean";
    case json::value_t::number_integer:
    case json::value_t::number_unsigned: return "integer";
    case json::value_t::number_float: return "number";
    default: return "unknown";
  }
}

void type_mismatch(const json& j, const std::string& path, std::string_view expected) {
  throw ConfigError(path, fmt::format("expected {}, got {}", expected, type_name(j)));
}

ObjectReader::ObjectReader(const json& j, std::string path)
    : j_(as_object(j, path)), path_(std::move(path)) {}

bool ObjectReader::has(std::string_view key) const {
  return j_.find(key) != j_.end();
}

const json& ObjectReader::required(std::string_view key) const {
  auto it = j_.find(key);
  if (it == j_.end()) throw ConfigError(child(key), "missing required field");
  return *it;
}

const json* ObjectReader::optional(std::string_view key) const {
  auto it = j_.find(key);
  if (it == j_.end() || it->is_null()) return nullptr;
  return &*it;
}

std::string ObjectReader::string(std::string_view key) const {
  return as_string(required(key), child(key));
}

std::optional<std::string> ObjectReader::opt_string(std::string_view key) const {
  if (const json* v = optional(key)) return as_string(*v, child(key));
  return std::nullopt;
}

std::int64_t ObjectReader::integer(std::string_view key) const {
  return as_integer(required(key), child(key));
}

std::optional<std::int64_t> ObjectReader::opt_integer(std::string_view key) const {
  if (const json* v = optional(key)) return as_integer(*v, child(key));
  return std::nullopt;
}

double ObjectReader::number(std::string_view key) const {
  return as_number(required(key), child(key));
}

std::optional<double> ObjectReader::opt_number(std::string_view key) const {
  if (const json* v = optional(key)) return as_number(*v, child(key));
  return std::nullopt;
}

std::optional<bool> ObjectReader::opt_bool(std::string_view key) const {
  if (const json* v = optional(key)) return as_bool(*v, child(key));
  return std::nullopt;
}

void ObjectReader::reject_unknown(std::initializer_list<std::string_view> allowed) const {
  for (const auto& [key, value] : j_.items()) {
    bool known = false;
    for (auto a : allowed) {
      if (a == key) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError(child(key), "unknown field");
  }
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) type_mismatch(j, path, "string");
  return j.get<std::string>();
}

std::int64_t as_integer(const json& j, const std::string& path) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_unsigned()) {
    auto u = j.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      throw ConfigError(path, "integer out of range");
    }
    return static_cast<std::int64_t>(u);
  }
  type_mismatch(j, path, "integer");
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) type_mismatch(j, path, "number");
  return j.get<double>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) type_mismatch(j, path, "boolean");
  return j.get<bool>();
}

const json& as_array(const json& j, const std::string& path) {
  if (!j.is_array()) type_mismatch(j, path, "array");
  return j;
}

const json& as_object(const json& j, const std::string& path) {
  if (!j.is_object()) type_mismatch(j, path, "object");
  return j;
}

}  // namespace psyrig::detail
