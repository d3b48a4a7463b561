#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "psyrig/postprocess.hpp"
#include "psyrig/prompt.hpp"
#include "psyrig/questionnaire.hpp"

namespace psyrig {

enum class PairLabel { kCorresponds, kNotCorresponds };
enum class PairOrigin { kTemplate, kParaphrase };

struct JudgePair {
  std::string option_display;
  std::string response_text;
  PairLabel label = PairLabel::kCorresponds;
  PairOrigin origin = PairOrigin::kTemplate;

  bool operator==(const JudgePair&) const = default;
};

enum class GoldClass { kMatch, kNoise };

struct LabeledEntropy {
  double entropy = 0.0;
  GoldClass gold = GoldClass::kMatch;
};

std::string_view to_string(PairLabel l);
std::string_view to_string(PairOrigin o);

// {"option_display", "response_text", "label", "origin"} on one line.
// The decoder throws DataError.
std::string encode_judge_pair(const JudgePair& p);
JudgePair decode_judge_pair(std::string_view line);

inline constexpr std::string_view kAnswerOptionPlaceholder = "<answer option>";

// One template per line, blank lines skipped.
std::vector<std::string> load_lines(const std::string& path);

// Every template filled with every option in three renderings: numeric only
// ("1."), text only ("never or seldom"), combined ("1. never or seldom").
// Text-only renderings of options with empty text are skipped. Throws
// std::invalid_argument unless each template holds exactly one placeholder.
std::vector<JudgePair> generate_seed_pairs(std::span<const std::string> templates,
                                           std::span<const AnswerOption> options);

// For each positive, `ratio` copies keeping response_text with the option
// replaced by one drawn uniformly from the other distinct options. Requires
// at least two distinct options.
std::vector<JudgePair> sample_negatives(std::span<const JudgePair> positives,
                                        int ratio, std::uint64_t rng_seed);

std::string_view paraphrase_system_prompt();
std::string_view paraphrase_user_template();

// One prompt per pair with k strategies drawn without replacement (partial
// Fisher-Yates over the strategy list) joined one per line.
std::vector<PromptPair> build_paraphrase_prompts(
    std::span<const JudgePair> pairs, std::span<const std::string> strategies,
    int k, std::uint64_t rng_seed);

// Keeps pairs whose similarity is at least the linear-interpolation
// percentile of all similarities.
std::vector<JudgePair> filter_by_similarity(
    std::span<const std::pair<JudgePair, double>> scored, double percentile);

// Candidates: the smallest distinct entropy (classifying everything as
// noise), midpoints between consecutive distinct entropies, and the largest
// entropy (classifying everything as match). A threshold t labels entropy
// > t as noise. Returns the mean of the smallest and largest candidate value
// reaching maximal accuracy.
double select_entropy_threshold(std::span<const LabeledEntropy> points);

enum class F1Average { kMacro, kMicro, kWeighted };

std::string_view to_string(F1Average a);

inline constexpr std::string_view kNoAnswerClass = "<no-answer>";

// Matched verdicts map to their label; everything else to kNoAnswerClass.
std::string predicted_class(const Judgment& j);

// F1 over the classes present in gold or predictions.
double f1_score(std::span<const std::string> predicted,
                std::span<const std::string> gold, F1Average average);

struct BootstrapSummary {
  double mean = 0.0;
  double q01 = 0.0;
  double q99 = 0.0;
  std::vector<double> samples;
};

// Resamples indices with replacement (stats.hpp stream contract) and
// records f1_score per resample.
BootstrapSummary bootstrap_f1(std::span<const Judgment> predictions,
                              std::span<const std::string> gold, int iterations,
                              std::uint64_t rng_seed,
                              F1Average average = F1Average::kMacro);

}  // namespace psyrig
