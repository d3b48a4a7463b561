#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psyrig/error.hpp"
#include "psyrig/persona.hpp"
#include "psyrig/postprocess.hpp"
#include "psyrig/prompt.hpp"
#include "psyrig/questionnaire.hpp"
#include "psyrig/stats.hpp"

namespace psyrig {

enum class ModelKind { kRemoteChat, kMock };

struct GenerationParams {
  int max_new_tokens = 64;
  double temperature = 1.0;
  int top_k = 50;
  double top_p = 0.95;

  bool operator==(const GenerationParams&) const = default;
};

struct RetryPolicy {
  int max_retries = 3;
  int initial_backoff_ms = 1000;
  double multiplier = 2.0;
  int max_backoff_ms = 30000;

  bool operator==(const RetryPolicy&) const = default;
};

// A rule matches when every matcher it sets matches. `error` makes the
// rule produce a failed generation instead of text.
struct MockRule {
  std::optional<std::string> question_id;
  std::optional<std::string> prompt_contains;
  std::string response;
  std::optional<std::string> error;

  bool operator==(const MockRule&) const = default;
};

struct MockScript {
  std::vector<MockRule> rules;
  std::string default_response;

  bool operator==(const MockScript&) const = default;
};

struct ModelSpec {
  std::string id;
  ModelKind kind = ModelKind::kMock;
  std::string endpoint;  // remote-chat only
  std::string model_name;
  GenerationParams params;
  std::string auth_env;  // empty: send no credential
  bool forward_seed = true;
  bool forward_top_k = false;
  RetryPolicy retry;
  int timeout_ms = 120000;
  double max_requests_per_second = 0.0;  // 0: unlimited
  std::optional<MockScript> mock;

  bool operator==(const ModelSpec&) const = default;
};

// How repetitions > 1 are realized. kResample keeps the configured seed and
// relies on sampling; kDeriveSeed gives every repetition its own seed.
enum class RepetitionMode { kResample, kDeriveSeed };

struct ExperimentConfig {
  std::string name;
  std::vector<std::int64_t> seeds;
  int repetitions = 1;
  std::optional<RepetitionMode> repetition_mode;
  std::vector<ModelSpec> models;
  PromptSettings prompt;
  PersonaSpec personas;
  Questionnaire questionnaire;
  JudgeConfig judge;
  StatConfig stats;

  bool operator==(const ExperimentConfig&) const = default;
};

struct RunTask {
  std::string model_id;
  Persona persona;
  std::string question_id;
  std::int64_t seed = 0;
  int repetition_index = 0;
  PromptVariant prompt_variant = PromptVariant::kJson;

  // "model|title surname|group|question|seed|repetition"; unique within a plan.
  std::string key() const;

  bool operator==(const RunTask&) const = default;
};

// Seed handed to the generator for a task.
std::int64_t effective_seed(const RunTask& task, RepetitionMode mode);

std::string_view to_string(ModelKind k);
std::string_view to_string(RepetitionMode m);

struct ParseOptions {
  // Relative "questionnaire", "personas" and template file references are
  // resolved against this directory.
  std::filesystem::path base_dir = ".";
  // Throw ConfigError carrying all violations when validate_config fails.
  bool strict = true;
};

// Parses an experiment document. Defaults are applied and unknown fields are
// rejected; every ConfigError names the offending path.
ExperimentConfig parse_experiment_config(std::string_view document,
                                         const ParseOptions& options = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        bool strict = true);

// Canonical, fully inlined document (2-space indent, fixed key order).
std::string serialize_experiment_config(const ExperimentConfig& cfg);

Questionnaire parse_questionnaire(std::string_view document);
Questionnaire load_questionnaire(const std::filesystem::path& path);
std::string serialize_questionnaire(const Questionnaire& q);

PersonaSpec load_persona_spec(const std::filesystem::path& path);

// Empty iff every invariant of the config and its parts holds.
std::vector<Violation> validate_config(const ExperimentConfig& cfg);

// models x personas x questions x seeds x repetitions, in that nesting order.
std::vector<RunTask> enumerate_run_plan(const ExperimentConfig& cfg);

}  // namespace psyrig
