#include "psyrig/prompt.hpp"

#include <fstream>
#include <sstream>

#include "text_util.hpp"

namespace psyrig {

namespace {

constexpr std::string_view kNaturalSystem =
    "Objective: Act like you are {persona}, a survey participant answering a questionnaire.\n"
    "{instruction}";

constexpr std::string_view kFriendlySystem =
    "Objective: Act like you are {persona}, a survey participant answering a questionnaire.\n"
    "{instruction}\n"
    "Instructions: Choose from the list of answer options to answer the question. Answer the "
    "question using only the provided answer options. If none of the options are correct, choose "
    "the option that is closest to being correct.";

constexpr std::string_view kJsonSystem =
    "Objective: Act like you are {persona}, a survey participant answering a questionnaire.\n"
    "{instruction}\n"
    "Instructions: Choose from the list of answer options to answer the question. Answer the "
    "question using only the provided answer options. If none of the options are correct, choose "
    "the option that is closest to being correct. The solution must be provided in this format: "
    "{\"answer\": \"answer option\"}.";

constexpr std::string_view kUserTemplate = "Question: {question}\nAnswer Options: {options}\nAnswer:";

bool is_ident_start(char c) {
  return c == '_' || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_ident_char(char c) {
  return is_ident_start(c) || (c >= '0' && c <= '9');
}

std::string normalize_newlines(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < s.size() && s[i + 1] == '\n') ++i;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(PromptVariant v) {
  switch (v) {
    case PromptVariant::kNatural: return "natural";
    case PromptVariant::kFriendly: return "friendly";
    case PromptVariant::kJson: return "json";
  }
  return "json";
}

std::string_view to_string(OptionStyle s) {
  return s == OptionStyle::kInlineComma ? "inline-comma" : "itemized-lines";
}

std::optional<PromptVariant> parse_prompt_variant(std::string_view s) {
  if (s == "natural") return PromptVariant::kNatural;
  if (s == "friendly") return PromptVariant::kFriendly;
  if (s == "json") return PromptVariant::kJson;
  return std::nullopt;
}

std::optional<OptionStyle> parse_option_style(std::string_view s) {
  if (s == "inline-comma") return OptionStyle::kInlineComma;
  if (s == "itemized-lines") return OptionStyle::kItemizedLines;
  return std::nullopt;
}

std::string_view default_system_template(PromptVariant v) {
  switch (v) {
    case PromptVariant::kNatural: return kNaturalSystem;
    case PromptVariant::kFriendly: return kFriendlySystem;
    case PromptVariant::kJson: return kJsonSystem;
  }
  return kJsonSystem;
}

std::string_view default_user_template() { return kUserTemplate; }

std::string format_answer_options(std::span<const AnswerOption> options, OptionStyle style) {
  const std::string_view sep = style == OptionStyle::kInlineComma ? ", " : "\n";
  std::string out;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (i > 0) out += sep;
    out += options[i].display();
  }
  return out;
}

std::string fill_template(std::string_view tmpl, std::span<const TemplateValue> values) {
  std::string out;
  out.reserve(tmpl.size() + 64);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{' && i + 1 < tmpl.size() && is_ident_start(tmpl[i + 1])) {
      std::size_t j = i + 1;
      while (j < tmpl.size() && is_ident_char(tmpl[j])) ++j;
      if (j < tmpl.size() && tmpl[j] == '}') {
        const std::string_view name = tmpl.substr(i + 1, j - i - 1);
        const TemplateValue* found = nullptr;
        for (const auto& v : values) {
          if (v.name == name) found = &v;
        }
        if (!found || found->value.empty()) {
          throw TemplateError("unresolved placeholder {" + std::string(name) + "}");
        }
        out += found->value;
        i = j + 1;
        continue;
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return normalize_newlines(out);
}

PromptPair render_prompt(const PromptSettings& settings, const Persona& persona, const Questionnaire& q,
                         const QuestionItem& item) {
  const std::string persona_text =
      persona.title.empty() || persona.surname.empty() ? std::string() : persona.render();
  const std::string options = format_answer_options(q.effective_options(item), settings.option_style);
  const TemplateValue values[] = {
      {"persona", persona_text},
      {"instruction", q.instruction},
      {"question", item.text},
      {"options", options},
  };
  const std::string_view sys = settings.system_template ? std::string_view(*settings.system_template)
                                                        : default_system_template(settings.variant);
  const std::string_view user =
      settings.user_template ? std::string_view(*settings.user_template) : default_user_template();
  return {fill_template(sys, values), fill_template(user, values)};
}

std::string load_template_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TemplateError("cannot read template file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = normalize_newlines(ss.str());
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

}  // namespace psyrig
