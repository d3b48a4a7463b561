#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "psyrig/experiment.hpp"
#include "psyrig/export.hpp"
#include "psyrig/postprocess.hpp"
#include "psyrig/questionnaire.hpp"
#include "psyrig/stats.hpp"

namespace psyrig {

struct ScoreRecord {
  std::string model_id;
  Persona persona;
  std::int64_t seed = 0;
  int repetition_index = 0;
  std::string scale_name;
  double value = 0.0;  // NaN when every item is missing
  int n_items = 0;
  int n_missing = 0;

  bool operator==(const ScoreRecord&) const = default;
};

// Reverse coding: min + max - value. Throws std::out_of_range when the value
// lies outside the range.
int option_value(int value, bool reverse, ScoreRange range);
int option_value(const AnswerOption& option, bool reverse, ScoreRange range);

// 3 - reverse_label, for answers given on the reversed-option BDI.
int invert_bdi_score(int reverse_label);

// Judgment per question id; std::nullopt marks an invalid response.
using JudgedItems = std::map<std::string, std::optional<Judgment>, std::less<>>;

struct ScaleScore {
  double value = 0.0;
  int n_items = 0;
  int n_missing = 0;
};

// Matched items contribute their (reverse-coded) option value; invalid,
// inconclusive and not-present items count as missing. Throws
// std::invalid_argument when the scale references a question absent from
// `judged`.
ScaleScore score_scale(const JudgedItems& judged, const ScaleDefinition& scale,
                       const Questionnaire& q);

// Groups records by (model, persona, seed, repetition) and scores every
// scale of the questionnaire for each group, in first-seen group order.
std::vector<ScoreRecord> score_records(std::span<const ResponseRecord> records,
                                       const Questionnaire& q);

struct RateMetrics {
  double invalid_pct = 0.0;
  double rejected_pct = 0.0;
  double na_pct = 0.0;
};

RateMetrics rate_metrics(std::span<const ResponseRecord> records);

// Share of matched judgments that chose `action_label`, in percent. Throws
// std::invalid_argument when nothing matched.
double action_rate(std::span<const Judgment> judged, std::string_view action_label);

enum class GroupKey { kModel, kGroup, kGenderTag, kScale, kPersona };

std::optional<GroupKey> parse_group_key(std::string_view s);
std::string_view to_string(GroupKey k);

struct AggregateRow {
  std::vector<std::string> keys;  // in group_by order
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
  int n_missing_total = 0;
};

// One row per key combination, sorted by key tuple. Records with a NaN value
// add to n_missing_total but not to the mean.
std::vector<AggregateRow> aggregate(std::span<const ScoreRecord> scores,
                                    std::span<const GroupKey> group_by,
                                    const StatConfig& cfg);

CsvTable score_table(std::span<const ScoreRecord> scores);
std::vector<ScoreRecord> parse_score_table(const CsvTable& table);

// Columns: group keys (scale last), mean, ci_low, ci_high, n, n_missing_total.
// "scale" is appended to the grouping when absent.
CsvTable report_table(std::span<const ScoreRecord> scores,
                      std::vector<GroupKey> group_by, const StatConfig& cfg);

}  // namespace psyrig
