#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace psyrig {

struct AnswerOption {
  std::string label;
  std::string text;
  // Defaults to the integer parse of the label when the document omits it.
  std::optional<int> numeric_value;

  // "label." when text is empty, otherwise "label. text".
  std::string display() const;

  bool operator==(const AnswerOption&) const = default;
};

struct QuestionItem {
  std::string id;
  std::string text;
  std::optional<std::vector<AnswerOption>> options;

  bool operator==(const QuestionItem&) const = default;
};

enum class Aggregation { kMean, kSum };

struct ScaleItem {
  std::string question_id;
  bool reverse = false;

  bool operator==(const ScaleItem&) const = default;
};

struct ScoreRange {
  int min_value = 1;
  int max_value = 5;

  bool operator==(const ScoreRange&) const = default;
};

struct ScaleDefinition {
  std::string name;
  std::vector<ScaleItem> items;
  Aggregation aggregation = Aggregation::kMean;
  ScoreRange score_range;

  bool operator==(const ScaleDefinition&) const = default;
};

struct Questionnaire {
  std::string id;
  std::string instruction;
  std::string notes;
  std::vector<QuestionItem> questions;
  std::optional<std::vector<AnswerOption>> global_options;
  std::vector<ScaleDefinition> scales;

  // The question's own options if present, else the global options, else
  // an empty span.
  std::span<const AnswerOption> effective_options(const QuestionItem& item) const;

  // nullptr when no question carries the id.
  const QuestionItem* find_question(std::string_view id) const;

  bool operator==(const Questionnaire&) const = default;
};

// Reverses the option order of every option list (per question and global)
// and hands the original label sequence out again in the new order, so a
// 0..k list stays labeled 0..k. numeric_value keeps the value the option had
// before inversion; scoring through numeric_value therefore lands on the
// original scale. Applying the operation twice restores the input.
//
// Throws ConfigError when a label is not an integer.
Questionnaire invert_questionnaire_options(const Questionnaire& q);

std::string_view to_string(Aggregation a);

}  // namespace psyrig
