#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace psyrig {

// One failed invariant. `path` uses JSON-pointer-like dotted notation,
// e.g. "questionnaire.scales[0].items[0]".
struct Violation {
  std::string path;
  std::string message;

  bool operator==(const Violation&) const = default;
};

// Malformed experiment document: missing field, type mismatch, unknown
// field, or (when parsing strictly) failed validation.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message);
  explicit ConfigError(std::vector<Violation> violations);

  const std::string& path() const noexcept { return path_; }
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::string path_;
  std::vector<Violation> violations_;
};

// Data file that cannot be read or decoded. Carries a 1-based line number
// when the failure is tied to a line.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& message, std::size_t line = 0);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace psyrig
