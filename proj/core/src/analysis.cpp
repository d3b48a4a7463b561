#include "psyrig/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

#include "text_util.hpp"

namespace psyrig {

int option_value(int value, bool reverse, ScoreRange range) {
  if (value < range.min_value || value > range.max_value) {
    throw std::out_of_range("option value " + std::to_string(value) + " outside " +
                            std::to_string(range.min_value) + ".." + std::to_string(range.max_value));
  }
  return reverse ? range.min_value + range.max_value - value : value;
}

int option_value(const AnswerOption& option, bool reverse, ScoreRange range) {
  if (!option.numeric_value) throw std::invalid_argument("option '" + option.label + "' has no numeric value");
  return option_value(*option.numeric_value, reverse, range);
}

int invert_bdi_score(int reverse_label) {
  if (reverse_label < 0 || reverse_label > 3) {
    throw std::out_of_range("BDI label " + std::to_string(reverse_label) + " outside 0..3");
  }
  return 3 - reverse_label;
}

ScaleScore score_scale(const JudgedItems& judged, const ScaleDefinition& scale, const Questionnaire& q) {
  ScaleScore out;
  out.n_items = static_cast<int>(scale.items.size());
  double total = 0.0;
  int present = 0;
  for (const auto& item : scale.items) {
    auto it = judged.find(item.question_id);
    if (it == judged.end()) {
      throw std::invalid_argument("scale " + scale.name + " references unjudged question " + item.question_id);
    }
    const QuestionItem* question = q.find_question(item.question_id);
    const std::optional<Judgment>& j = it->second;
    const AnswerOption* chosen = nullptr;
    if (question && j && j->matched()) {
      for (const auto& opt : q.effective_options(*question)) {
        if (opt.label == j->label) chosen = &opt;
      }
    }
    if (!chosen) {
      ++out.n_missing;
      continue;
    }
    total += option_value(*chosen, item.reverse, scale.score_range);
    ++present;
  }
  if (present == 0) {
    out.value = std::numeric_limits<double>::quiet_NaN();
  } else {
    out.value = scale.aggregation == Aggregation::kMean ? total / present : total;
  }
  return out;
}

std::vector<ScoreRecord> score_records(std::span<const ResponseRecord> records, const Questionnaire& q) {
  using Key = std::tuple<std::string, Persona, std::int64_t, int>;
  std::vector<Key> order;
  std::map<Key, JudgedItems> groups;
  for (const auto& r : records) {
    Key key{r.task.model_id, r.task.persona, r.task.seed, r.task.repetition_index};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second[r.task.question_id] = r.validity.valid ? r.judgment : std::nullopt;
  }
  std::vector<ScoreRecord> out;
  for (const auto& key : order) {
    JudgedItems& judged = groups[key];
    for (const auto& scale : q.scales) {
      for (const auto& item : scale.items) judged.try_emplace(item.question_id, std::nullopt);
      const ScaleScore s = score_scale(judged, scale, q);
      out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), scale.name, s.value,
                     s.n_items, s.n_missing});
    }
  }
  return out;
}

RateMetrics rate_metrics(std::span<const ResponseRecord> records) {
  if (records.empty()) throw std::invalid_argument("rate_metrics: no records");
  std::size_t invalid = 0;
  std::size_t rejected = 0;
  for (const auto& r : records) {
    if (!r.validity.valid) {
      ++invalid;
    } else if (!r.judgment || !r.judgment->matched()) {
      ++rejected;
    }
  }
  const double n = static_cast<double>(records.size());
  RateMetrics m;
  m.invalid_pct = 100.0 * static_cast<double>(invalid) / n;
  m.rejected_pct = 100.0 * static_cast<double>(rejected) / n;
  m.na_pct = 100.0 * static_cast<double>(invalid + rejected) / n;
  return m;
}

double action_rate(std::span<const Judgment> judged, std::string_view action_label) {
  std::size_t usable = 0;
  std::size_t action = 0;
  for (const auto& j : judged) {
    if (!j.matched()) continue;
    ++usable;
    if (j.label == action_label) ++action;
  }
  if (usable == 0) throw std::invalid_argument("action_rate: no usable responses");
  return 100.0 * static_cast<double>(action) / static_cast<double>(usable);
}

std::optional<GroupKey> parse_group_key(std::string_view s) {
  if (s == "model") return GroupKey::kModel;
  if (s == "group") return GroupKey::kGroup;
  if (s == "gender" || s == "gender_tag") return GroupKey::kGenderTag;
  if (s == "scale") return GroupKey::kScale;
  if (s == "persona") return GroupKey::kPersona;
  return std::nullopt;
}

std::string_view to_string(GroupKey k) {
  switch (k) {
    case GroupKey::kModel: return "model";
    case GroupKey::kGroup: return "group";
    case GroupKey::kGenderTag: return "gender_tag";
    case GroupKey::kScale: return "scale";
    case GroupKey::kPersona: return "persona";
  }
  return "model";
}

namespace {

std::string key_value(const ScoreRecord& r, GroupKey k) {
  switch (k) {
    case GroupKey::kModel: return r.model_id;
    case GroupKey::kGroup: return r.persona.group;
    case GroupKey::kGenderTag: return r.persona.gender_tag();
    case GroupKey::kScale: return r.scale_name;
    case GroupKey::kPersona: return r.persona.render();
  }
  return {};
}

}  // namespace

std::vector<AggregateRow> aggregate(std::span<const ScoreRecord> scores, std::span<const GroupKey> group_by,
                                    const StatConfig& cfg) {
  if (scores.empty()) throw std::invalid_argument("aggregate: no scores");
  struct Bucket {
    std::vector<double> values;
    int n_missing = 0;
  };
  std::map<std::vector<std::string>, Bucket> buckets;
  for (const auto& r : scores) {
    std::vector<std::string> key;
    key.reserve(group_by.size());
    for (auto k : group_by) key.push_back(key_value(r, k));
    Bucket& b = buckets[std::move(key)];
    b.n_missing += r.n_missing;
    if (!std::isnan(r.value)) b.values.push_back(r.value);
  }
  std::vector<AggregateRow> out;
  out.reserve(buckets.size());
  for (auto& [key, b] : buckets) {
    AggregateRow row;
    row.keys = key;
    row.n = b.values.size();
    row.n_missing_total = b.n_missing;
    if (b.values.empty()) {
      row.mean = row.ci_low = row.ci_high = std::numeric_limits<double>::quiet_NaN();
    } else {
      row.mean = mean(b.values);
      std::tie(row.ci_low, row.ci_high) = bootstrap_ci(b.values, cfg);
    }
    out.push_back(std::move(row));
  }
  return out;
}

CsvTable score_table(std::span<const ScoreRecord> scores) {
  CsvTable t;
  t.header = {"model_id", "title", "surname", "group", "gender_tag", "seed", "repetition",
              "scale", "value", "n_items", "n_missing"};
  for (const auto& s : scores) {
    t.rows.push_back({s.model_id, s.persona.title, s.persona.surname, s.persona.group, s.persona.gender_tag(),
                      std::to_string(s.seed), std::to_string(s.repetition_index), s.scale_name,
                      format_number(s.value), std::to_string(s.n_items), std::to_string(s.n_missing)});
  }
  return t;
}

namespace {

template <typename T>
T parse_field(const std::string& s, const char* what, std::size_t row) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError(std::string("score table: bad ") + what + " '" + s + "'", row);
  }
  return v;
}

}  // namespace

std::vector<ScoreRecord> parse_score_table(const CsvTable& table) {
  const std::vector<std::string> expected = score_table({}).header;
  if (table.header != expected) throw DataError("score table: unexpected header");
  std::vector<ScoreRecord> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t line = i + 2;
    if (row.size() != expected.size()) throw DataError("score table: wrong field count", line);
    ScoreRecord r;
    r.model_id = row[0];
    r.persona = {row[1], row[2], row[3]};
    r.seed = parse_field<std::int64_t>(row[5], "seed", line);
    r.repetition_index = parse_field<int>(row[6], "repetition", line);
    r.scale_name = row[7];
    r.value = row[8].empty() ? std::numeric_limits<double>::quiet_NaN() : parse_field<double>(row[8], "value", line);
    r.n_items = parse_field<int>(row[9], "n_items", line);
    r.n_missing = parse_field<int>(row[10], "n_missing", line);
    out.push_back(std::move(r));
  }
  return out;
}

CsvTable report_table(std::span<const ScoreRecord> scores, std::vector<GroupKey> group_by, const StatConfig& cfg) {
  if (std::find(group_by.begin(), group_by.end(), GroupKey::kScale) == group_by.end()) {
    group_by.push_back(GroupKey::kScale);
  }
  CsvTable t;
  for (auto k : group_by) t.header.emplace_back(to_string(k));
  for (const char* c : {"mean", "ci_low", "ci_high", "n", "n_missing_total"}) t.header.emplace_back(c);
  for (const auto& row : aggregate(scores, group_by, cfg)) {
    std::vector<std::string> fields = row.keys;
    fields.push_back(format_number(row.mean));
    fields.push_back(format_number(row.ci_low));
    fields.push_back(format_number(row.ci_high));
    fields.push_back(std::to_string(row.n));
    fields.push_back(std::to_string(row.n_missing_total));
    t.rows.push_back(std::move(fields));
  }
  return t;
}

}  // namespace psyrig
