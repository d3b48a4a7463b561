#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "psyrig/questionnaire.hpp"

namespace psyrig {

enum class Verdict { kMatched, kInconclusive, kNotPresent };
enum class JudgeMethod { kRule, kModel };
enum class EntropyBase { kNats, kBits };

struct OptionScore {
  std::string label;
  double value = 0.0;

  bool operator==(const OptionScore&) const = default;
};

struct Judgment {
  Verdict verdict = Verdict::kNotPresent;
  std::string label;  // set only for kMatched
  std::vector<OptionScore> scores;
  JudgeMethod method = JudgeMethod::kRule;

  bool matched() const { return verdict == Verdict::kMatched; }
  bool operator==(const Judgment&) const = default;
};

struct Validity {
  bool valid = true;
  std::string reason;  // matched phrase or classifier tag when invalid

  static Validity ok() { return {}; }
  static Validity invalid(std::string why) { return {false, std::move(why)}; }
  bool operator==(const Validity&) const = default;
};

struct ProviderEndpoint {
  std::string endpoint;
  std::string auth_env;
  int timeout_ms = 120000;

  bool operator==(const ProviderEndpoint&) const = default;
};

struct JudgeConfig {
  double entropy_threshold = 0.359;
  EntropyBase entropy_base = EntropyBase::kNats;
  std::optional<ProviderEndpoint> probability_provider;
  // Empty means the shipped default list.
  std::vector<std::string> refusal_phrases;

  bool operator==(const JudgeConfig&) const = default;
};

std::string_view to_string(Verdict v);
std::string_view to_string(JudgeMethod m);
std::string_view to_string(EntropyBase b);

// Line breaks become spaces, bytes outside ASCII are dropped, whitespace
// runs collapse to one space, and the ends are trimmed.
std::string clean_response(std::string_view raw);

// String value of "answer" in the first well-formed JSON object that has
// that key, wherever it sits in the text. Numbers are returned in their
// JSON spelling.
std::optional<std::string> extract_json_answer(std::string_view text);

// Default refusal/apology phrases, lowercase, in match-priority order.
const std::vector<std::string>& default_refusal_phrases();
// One phrase per line; blank lines and lines starting with '#' are skipped.
std::vector<std::string> load_refusal_phrases(const std::string& path);

// Invalid(phrase) for the first phrase (in list order) found
// case-insensitively in text.
Validity validate_response(std::string_view text,
                           std::span<const std::string> phrases);

struct OptionTokens {
  std::string numeric;
  std::string label;

  bool operator==(const OptionTokens&) const = default;
};
OptionTokens tokenize_option(const AnswerOption& option);

// Token-overlap judge. Per option: standalone occurrences of the numeric
// component (no ASCII letter or digit on either side) plus case-insensitive
// occurrences of the label component after whitespace normalization.
Judgment judge_rule_based(std::string_view text,
                          std::span<const AnswerOption> options);

// Shannon entropy with 0 ln 0 = 0. Throws std::invalid_argument when an
// entry is negative or the sum is off 1 by more than 1e-9.
double entropy(std::span<const double> dist,
               EntropyBase base = EntropyBase::kNats);

struct LabeledProbability {
  std::string label;
  double probability = 0.0;
};

// Decision step of the model-based judge: normalize the per-option match
// probabilities, reject as NotPresent when entropy exceeds the threshold,
// otherwise pick the argmax (Inconclusive on an exact tie).
Judgment judge_model_based(std::span<const LabeledProbability> probabilities,
                           double threshold,
                           EntropyBase base = EntropyBase::kNats);

// Source of per-option "response matches this option" probabilities for the
// model-based judge.
class ProbabilityProvider {
 public:
  virtual ~ProbabilityProvider() = default;
  virtual std::vector<double> match_probabilities(
      std::string_view response_text,
      std::span<const std::string> option_display_texts) = 0;
};

// Outcome of cleaning, validating and judging one generation.
struct ProcessedText {
  std::string cleaned;
  std::optional<std::string> extracted_answer;
  Validity validity;
  std::optional<Judgment> judgment;  // present iff valid
};

struct JudgeSetup {
  JudgeMethod method = JudgeMethod::kRule;
  double entropy_threshold = 0.359;
  EntropyBase entropy_base = EntropyBase::kNats;
  ProbabilityProvider* provider = nullptr;  // required for kModel
  std::span<const std::string> refusal_phrases;
};

// Full chain: clean, extract, validate, then judge the extracted answer if
// present and the cleaned text otherwise.
ProcessedText process_text(std::string_view raw,
                           std::span<const AnswerOption> options,
                           const JudgeSetup& setup);

}  // namespace psyrig
