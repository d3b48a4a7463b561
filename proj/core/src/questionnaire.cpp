#include "psyrig/questionnaire.hpp"

#include <charconv>

#include "psyrig/error.hpp"
#include "text_util.hpp"

namespace psyrig {

std::string AnswerOption::display() const {
  if (text.empty()) return label + ".";
  return label + ". " + text;
}

std::span<const AnswerOption> Questionnaire::effective_options(
    const QuestionItem& item) const {
  if (item.options) return *item.options;
  if (global_options) return *global_options;
  return {};
}

const QuestionItem* Questionnaire::find_question(std::string_view id) const {
  for (const auto& q : questions) {
    if (q.id == id) return &q;
  }
  return nullptr;
}

std::string_view to_string(Aggregation a) {
  return a == Aggregation::kMean ? "mean" : "sum";
}

namespace {

std::vector<AnswerOption> invert_list(const std::vector<AnswerOption>& options,
                                      const std::string& where) {
  for (const auto& o : options) {
    if (!detail::parse_int(o.label)) {
      throw ConfigError(where, "option label '" + o.label + "' is not an integer");
    }
  }
  std::vector<AnswerOption> out;
  out.reserve(options.size());
  const std::size_t n = options.size();
  for (std::size_t i = 0; i < n; ++i) {
    AnswerOption moved = options[n - 1 - i];
    moved.label = options[i].label;
    out.push_back(std::move(moved));
  }
  return out;
}

}  // namespace

Questionnaire invert_questionnaire_options(const Questionnaire& q) {
  Questionnaire out = q;
  if (out.global_options) {
    out.global_options = invert_list(*q.global_options, "global_options");
  }
  for (auto& item : out.questions) {
    if (item.options) item.options = invert_list(*item.options, "questions." + item.id);
  }
  return out;
}

}  // namespace psyrig
