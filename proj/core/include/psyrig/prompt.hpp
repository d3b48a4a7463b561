#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "psyrig/persona.hpp"
#include "psyrig/questionnaire.hpp"

namespace psyrig {

enum class PromptVariant { kNatural, kFriendly, kJson };
enum class OptionStyle { kInlineComma, kItemizedLines };

struct PromptSettings {
  PromptVariant variant = PromptVariant::kJson;
  OptionStyle option_style = OptionStyle::kInlineComma;
  // Override the built-in template text of the chosen variant.
  std::optional<std::string> system_template;
  std::optional<std::string> user_template;

  bool operator==(const PromptSettings&) const = default;
};

struct PromptPair {
  std::string system;
  std::string user;

  bool operator==(const PromptPair&) const = default;
};

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string_view to_string(PromptVariant v);
std::string_view to_string(OptionStyle s);
std::optional<PromptVariant> parse_prompt_variant(std::string_view s);
std::optional<OptionStyle> parse_option_style(std::string_view s);

// Built-in template text. Placeholders: {persona}, {instruction},
// {question}, {options}.
std::string_view default_system_template(PromptVariant v);
std::string_view default_user_template();

std::string format_answer_options(std::span<const AnswerOption> options,
                                  OptionStyle style);

// A {name} sequence where name is [A-Za-z_][A-Za-z0-9_]* is a placeholder;
// any other brace is literal text. Unknown names and empty values raise
// TemplateError("unresolved placeholder ..."). Line endings in the output
// are normalized to "\n".
struct TemplateValue {
  std::string_view name;
  std::string_view value;
};
std::string fill_template(std::string_view tmpl,
                          std::span<const TemplateValue> values);

PromptPair render_prompt(const PromptSettings& settings, const Persona& persona,
                         const Questionnaire& q, const QuestionItem& item);

// Reads a template file, converting CRLF/CR line endings to LF and dropping
// one trailing newline.
std::string load_template_file(const std::string& path);

}  // namespace psyrig
