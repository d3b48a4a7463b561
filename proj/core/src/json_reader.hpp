#pragma once

// Path-tracking accessors over nlohmann::json for strict schema decoding.

#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "psyrig/error.hpp"

namespace psyrig::detail {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string join_path(std::string_view parent, std::string_view key);
std::string index_path(std::string_view parent, std::size_t i);

const char* type_name(const json& j);

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path);

  bool has(std::string_view key) const;
  const json& required(std::string_view key) const;
  const json* optional(std::string_view key) const;

  std::string child(std::string_view key) const { return join_path(path_, key); }
  const std::string& path() const { return path_; }

  std::string string(std::string_view key) const;
  std::optional<std::string> opt_string(std::string_view key) const;
  std::int64_t integer(std::string_view key) const;
  std::optional<std::int64_t> opt_integer(std::string_view key) const;
  double number(std::string_view key) const;
  std::optional<double> opt_number(std::string_view key) const;
  std::optional<bool> opt_bool(std::string_view key) const;

  // Throws ConfigError at the first key not in `allowed`.
  void reject_unknown(std::initializer_list<std::string_view> allowed) const;

 private:
  const json& j_;
  std::string path_;
};

std::string as_string(const json& j, const std::string& path);
std::int64_t as_integer(const json& j, const std::string& path);
double as_number(const json& j, const std::string& path);
bool as_bool(const json& j, const std::string& path);
const json& as_array(const json& j, const std::string& path);
const json& as_object(const json& j, const std::string& path);

[[noreturn]] void type_mismatch(const json& j, const std::string& path,
                                std::string_view expected);

}  // namespace psyrig::detail
