#include "psyrig/postprocess.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "text_util.hpp"

namespace psyrig {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kMatched: return "matched";
    case Verdict::kInconclusive: return "inconclusive";
    case Verdict::kNotPresent: return "not-present";
  }
  return "not-present";
}

std::string_view to_string(JudgeMethod m) {
  return m == JudgeMethod::kRule ? "rule" : "model";
}

std::string_view to_string(EntropyBase b) {
  return b == EntropyBase::kNats ? "nats" : "bits";
}

std::string clean_response(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80) continue;
    if (detail::is_ascii_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(ch);
  }
  return out;
}

namespace {

// Index one past the '}' closing the object that opens at `start`, or npos.
std::size_t match_brace(std::string_view text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::optional<std::string> extract_json_answer(std::string_view text) {
  for (std::size_t pos = text.find('{'); pos != std::string_view::npos; pos = text.find('{', pos + 1)) {
    const std::size_t end = match_brace(text, pos);
    if (end == std::string_view::npos) continue;
    auto j = nlohmann::json::parse(text.substr(pos, end - pos), nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    auto it = j.find("answer");
    if (it == j.end()) continue;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number()) return it->dump();
  }
  return std::nullopt;
}

const std::vector<std::string>& default_refusal_phrases() {
  static const std::vector<std::string> phrases = {
      "i'm sorry",
      "i am sorry",
      "im sorry",
      "i apologize",
      "as an ai",
      "as a language model",
      "as an assistant",
      "i'm an ai",
      "i am an ai",
      "i'm not able to",
      "i am not able to",
      "i'm unable to",
      "i am unable to",
      "i must decline",
      "i cannot provide",
      "i can't provide",
      "i cannot answer",
      "i do not have personal",
      "i don't have personal",
      "i don't have feelings",
      "i do not have feelings",
      "i'm not comfortable",
      "not comfortable",
  };
  return phrases;
}

std::vector<std::string> load_refusal_phrases(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read refusal phrase file " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const std::string phrase = detail::normalize_for_match(line);
    if (phrase.empty() || phrase.front() == '#') continue;
    out.push_back(phrase);
  }
  return out;
}

Validity validate_response(std::string_view text, std::span<const std::string> phrases) {
  const std::string hay = detail::normalize_for_match(text);
  for (const auto& p : phrases) {
    const std::string needle = detail::normalize_for_match(p);
    if (!needle.empty() && hay.find(needle) != std::string::npos) return Validity::invalid(needle);
  }
  return Validity::ok();
}

OptionTokens tokenize_option(const AnswerOption& option) {
  return {option.label, option.text};
}

namespace {

std::size_t count_standalone(std::string_view text, std::string_view token) {
  if (token.empty()) return 0;
  std::size_t count = 0;
  for (std::size_t pos = text.find(token); pos != std::string_view::npos; pos = text.find(token, pos + 1)) {
    const bool left_ok = pos == 0 || !detail::is_ascii_alnum(static_cast<unsigned char>(text[pos - 1]));
    const std::size_t end = pos + token.size();
    const bool right_ok = end >= text.size() || !detail::is_ascii_alnum(static_cast<unsigned char>(text[end]));
    if (left_ok && right_ok) {
      ++count;
      pos = end - 1;
    }
  }
  return count;
}

Judgment decide(std::vector<OptionScore> scores, JudgeMethod method) {
  Judgment j;
  j.method = method;
  double best = 0.0;
  std::size_t best_count = 0;
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].value > best) {
      best = scores[i].value;
      best_count = 1;
      best_index = i;
    } else if (scores[i].value == best && best > 0.0) {
      ++best_count;
    }
  }
  if (best <= 0.0) {
    j.verdict = Verdict::kNotPresent;
  } else if (best_count > 1) {
    j.verdict = Verdict::kInconclusive;
  } else {
    j.verdict = Verdict::kMatched;
    j.label = scores[best_index].label;
  }
  j.scores = std::move(scores);
  return j;
}

}  // namespace

Judgment judge_rule_based(std::string_view text, std::span<const AnswerOption> options) {
  const std::string normalized = detail::normalize_for_match(text);
  std::vector<OptionScore> scores;
  scores.reserve(options.size());
  for (const auto& opt : options) {
    const OptionTokens tok = tokenize_option(opt);
    const std::size_t n = count_standalone(text, tok.numeric) +
                          detail::count_occurrences(normalized, detail::normalize_for_match(tok.label));
    scores.push_back({opt.label, static_cast<double>(n)});
  }
  return decide(std::move(scores), JudgeMethod::kRule);
}

double entropy(std::span<const double> dist, EntropyBase base) {
  double sum = 0.0;
  double h = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0)) throw std::invalid_argument("entropy: negative probability");
    sum += p;
    if (p > 0.0) h -= p * std::log(p);
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("entropy: distribution does not sum to 1");
  if (base == EntropyBase::kBits) h /= std::log(2.0);
  return h;
}

Judgment judge_model_based(std::span<const LabeledProbability> probabilities, double threshold,
                           EntropyBase base) {
  if (probabilities.empty()) throw std::invalid_argument("judge_model_based: no options");
  double total = 0.0;
  for (const auto& lp : probabilities) {
    if (!(lp.probability >= 0.0 && lp.probability <= 1.0)) {
      throw std::invalid_argument("judge_model_based: probability outside [0, 1]");
    }
    total += lp.probability;
  }
  std::vector<OptionScore> scores;
  scores.reserve(probabilities.size());
  if (total <= 0.0) {
    for (const auto& lp : probabilities) scores.push_back({lp.label, 0.0});
    return {Verdict::kNotPresent, "", std::move(scores), JudgeMethod::kModel};
  }
  std::vector<double> dist;
  dist.reserve(probabilities.size());
  for (const auto& lp : probabilities) {
    dist.push_back(lp.probability / total);
    scores.push_back({lp.label, dist.back()});
  }
  if (entropy(dist, base) > threshold) return {Verdict::kNotPresent, "", std::move(scores), JudgeMethod::kModel};
  return decide(std::move(scores), JudgeMethod::kModel);
}

ProcessedText process_text(std::string_view raw, std::span<const AnswerOption> options, const JudgeSetup& setup) {
  ProcessedText out;
  out.cleaned = clean_response(raw);
  out.extracted_answer = extract_json_answer(out.cleaned);
  const auto phrases = setup.refusal_phrases.empty() ? std::span<const std::string>(default_refusal_phrases())
                                                     : setup.refusal_phrases;
  out.validity = validate_response(out.cleaned, phrases);
  if (!out.validity.valid) return out;
  const std::string_view judged = out.extracted_answer ? std::string_view(*out.extracted_answer)
                                                       : std::string_view(out.cleaned);
  if (setup.method == JudgeMethod::kRule) {
    out.judgment = judge_rule_based(judged, options);
    return out;
  }
  if (!setup.provider) throw std::invalid_argument("model-based judging needs a probability provider");
  std::vector<std::string> displays;
  displays.reserve(options.size());
  for (const auto& o : options) displays.push_back(o.display());
  const auto probs = setup.provider->match_probabilities(judged, displays);
  if (probs.size() != options.size()) {
    throw std::runtime_error("probability provider returned " + std::to_string(probs.size()) +
                             " values for " + std::to_string(options.size()) + " options");
  }
  std::vector<LabeledProbability> labeled;
  labeled.reserve(options.size());
  for (std::size_t i = 0; i < options.size(); ++i) labeled.push_back({options[i].label, probs[i]});
  out.judgment = judge_model_based(labeled, setup.entropy_threshold, setup.entropy_base);
  return out;
}

}  // namespace psyrig
