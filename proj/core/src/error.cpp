#include "psyrig/error.hpp"

#include <fmt/format.h>

namespace psyrig {
namespace {

std::string describe(const std::vector<Violation>& violations) {
  std::string out = "invalid experiment config:";
  for (const auto& v : violations) out += fmt::format("\n  {}: {}", v.path, v.message);
  return out;
}

}  // namespace

ConfigError::ConfigError(std::string path, const std::string& message)
    : std::runtime_error(path.empty() ? message : fmt::format("{}: {}", path, message)),
      path_(std::move(path)) {}

ConfigError::ConfigError(std::vector<Violation> violations)
    : std::runtime_error(describe(violations)),
      path_(violations.empty() ? std::string() : violations.front().path),
      violations_(std::move(violations)) {}

DataError::DataError(const std::string& message, std::size_t line)
    : std::runtime_error(line == 0 ? message : fmt::format("line {}: {}", line, message)),
      line_(line) {}

}  // namespace psyrig
