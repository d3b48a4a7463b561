#include "psyrig/judge_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "psyrig/error.hpp"
#include "psyrig/stats.hpp"
#include "text_util.hpp"

namespace psyrig {

namespace {

constexpr std::string_view kParaphraseSystem =
    "You are a language model specializing in paraphrasing.\n"
    "\n"
    "Your task is to generate **multiple distinct paraphrases** of a provided statement. Each paraphrase must retain the original meaning but use **different wording** and **varied sentence** structure. Ensure that the style matches a human survey participant answering a multiple-choice questionnaire. It is important to provide diverse, creative, and unique paraphrases to cover a wide range of possible human responses. You are allowed to invent details or examples to enrich the paraphrases.\n"
    "\n"
    "Return **multiple paraphrased versions** of the statement, each on a new line, with no extra text or formatting.\n"
    "\n"
    "Example statement: \"The correct answer is 3. 'sometimes'.\"\n"
    "Example list of paraphrases:\n"
    "3. 'sometimes' is the only logical choice\n"
    "Instincts tell me to go with 3. 'sometimes'\n"
    "Option 3. 'sometimes' seems like the best choice\n"
    "After reconsidering, it's obvious that the earlier option was wrong, and 3. 'sometimes' is the right answer.\n"
    "After considering all other options, 3. 'sometimes' seems the most fitting.\n"
    "I’m inclined to choose 3. 'sometimes'";

constexpr std::string_view kParaphraseUser =
    "Please generate **a paraphrased version** of the statement for every named strategy while preserving the meaning. **Do not include any numbering, formatting, explanations, or additional text**. The output must be the paraphrased versions alone, each on a new line, with no extra text or formatting. Be as creative and diverse as possible in your paraphrasing, considering many styles and ways a human might answer a multiple-choice question.\n"
    "\n"
    "Generate one paraphrased version for each of the following strategies:\n"
    "{strategy_list}\n"
    "\n"
    "Statement to be paraphrased: \"{answer}\"";

}  // namespace

std::string_view to_string(PairLabel l) {
  return l == PairLabel::kCorresponds ? "corresponds" : "not-corresponds";
}

std::string_view to_string(PairOrigin o) {
  return o == PairOrigin::kTemplate ? "template" : "paraphrase";
}

std::string encode_judge_pair(const JudgePair& p) {
  nlohmann::ordered_json j;
  j["option_display"] = p.option_display;
  j["response_text"] = p.response_text;
  j["label"] = to_string(p.label);
  j["origin"] = to_string(p.origin);
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

JudgePair decode_judge_pair(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DataError("malformed judge pair");
  auto text = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw DataError(std::string("judge pair needs string field '") + key + "'");
    return it->get<std::string>();
  };
  JudgePair p;
  p.option_display = text("option_display");
  p.response_text = text("response_text");
  const std::string label = text("label");
  if (label == "corresponds") {
    p.label = PairLabel::kCorresponds;
  } else if (label == "not-corresponds") {
    p.label = PairLabel::kNotCorresponds;
  } else {
    throw DataError("unknown pair label '" + label + "'");
  }
  const std::string origin = j.contains("origin") ? text("origin") : "template";
  if (origin == "template") {
    p.origin = PairOrigin::kTemplate;
  } else if (origin == "paraphrase") {
    p.origin = PairOrigin::kParaphrase;
  } else {
    throw DataError("unknown pair origin '" + origin + "'");
  }
  return p;
}

std::string_view to_string(F1Average a) {
  switch (a) {
    case F1Average::kMacro: return "macro";
    case F1Average::kMicro: return "micro";
    case F1Average::kWeighted: return "weighted";
  }
  return "macro";
}

std::vector<std::string> load_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(line);
  }
  return out;
}

std::vector<JudgePair> generate_seed_pairs(std::span<const std::string> templates,
                                           std::span<const AnswerOption> options) {
  std::vector<JudgePair> out;
  for (std::size_t t = 0; t < templates.size(); ++t) {
    const std::string& tmpl = templates[t];
    if (detail::count_occurrences(tmpl, kAnswerOptionPlaceholder) != 1) {
      throw std::invalid_argument("template " + std::to_string(t + 1) + " must contain exactly one " +
                                  std::string(kAnswerOptionPlaceholder) + " placeholder");
    }
    const std::size_t at = tmpl.find(kAnswerOptionPlaceholder);
    auto fill = [&](const std::string& value) {
      std::string s = tmpl;
      s.replace(at, kAnswerOptionPlaceholder.size(), value);
      return s;
    };
    for (const auto& opt : options) {
      const std::string display = opt.display();
      out.push_back({display, fill(opt.label + "."), PairLabel::kCorresponds, PairOrigin::kTemplate});
      if (!opt.text.empty()) out.push_back({display, fill(opt.text), PairLabel::kCorresponds, PairOrigin::kTemplate});
      out.push_back({display, fill(display), PairLabel::kCorresponds, PairOrigin::kTemplate});
    }
  }
  return out;
}

std::vector<JudgePair> sample_negatives(std::span<const JudgePair> positives, int ratio, std::uint64_t rng_seed) {
  if (ratio < 1) throw std::invalid_argument("sample_negatives: ratio must be positive");
  std::vector<std::string> universe;
  std::set<std::string> seen;
  for (const auto& p : positives) {
    if (seen.insert(p.option_display).second) universe.push_back(p.option_display);
  }
  if (!positives.empty() && universe.size() < 2) {
    throw std::invalid_argument("sample_negatives: need at least two distinct options");
  }
  Rng rng(rng_seed);
  std::vector<JudgePair> out;
  out.reserve(positives.size() * static_cast<std::size_t>(ratio));
  std::vector<const std::string*> others;
  for (const auto& p : positives) {
    others.clear();
    for (const auto& u : universe) {
      if (u != p.option_display) others.push_back(&u);
    }
    for (int r = 0; r < ratio; ++r) {
      const std::string& pick = *others[uniform_index(rng, others.size())];
      out.push_back({pick, p.response_text, PairLabel::kNotCorresponds, p.origin});
    }
  }
  return out;
}

std::string_view paraphrase_system_prompt() { return kParaphraseSystem; }
std::string_view paraphrase_user_template() { return kParaphraseUser; }

std::vector<PromptPair> build_paraphrase_prompts(std::span<const JudgePair> pairs,
                                                 std::span<const std::string> strategies, int k,
                                                 std::uint64_t rng_seed) {
  if (k < 1 || static_cast<std::size_t>(k) > strategies.size()) {
    throw std::invalid_argument("build_paraphrase_prompts: k must lie in [1, number of strategies]");
  }
  Rng rng(rng_seed);
  std::vector<PromptPair> out;
  out.reserve(pairs.size());
  std::vector<std::size_t> idx(strategies.size());
  for (const auto& pair : pairs) {
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::string list;
    for (int i = 0; i < k; ++i) {
      const std::size_t ui = static_cast<std::size_t>(i);
      const std::size_t j = ui + uniform_index(rng, idx.size() - ui);
      std::swap(idx[ui], idx[j]);
      if (i > 0) list.push_back('\n');
      list += strategies[idx[ui]];
    }
    const TemplateValue values[] = {{"strategy_list", list}, {"answer", pair.response_text}};
    out.push_back({std::string(kParaphraseSystem), fill_template(kParaphraseUser, values)});
  }
  return out;
}

std::vector<JudgePair> filter_by_similarity(std::span<const std::pair<JudgePair, double>> scored,
                                            double percentile) {
  if (scored.empty()) throw std::invalid_argument("filter_by_similarity: empty input");
  if (!(percentile >= 0.0 && percentile <= 100.0)) {
    throw std::invalid_argument("filter_by_similarity: percentile outside [0, 100]");
  }
  std::vector<double> sims;
  sims.reserve(scored.size());
  for (const auto& [pair, s] : scored) {
    if (!std::isfinite(s)) throw std::invalid_argument("filter_by_similarity: non-finite score");
    sims.push_back(s);
  }
  std::sort(sims.begin(), sims.end());
  const double threshold = quantile_linear(sims, percentile / 100.0);
  std::vector<JudgePair> out;
  for (const auto& [pair, s] : scored) {
    if (s >= threshold) out.push_back(pair);
  }
  return out;
}

double select_entropy_threshold(std::span<const LabeledEntropy> points) {
  bool has_match = false;
  bool has_noise = false;
  std::vector<double> values;
  for (const auto& p : points) {
    if (!std::isfinite(p.entropy) || p.entropy < 0.0) {
      throw std::invalid_argument("select_entropy_threshold: entropy must be finite and non-negative");
    }
    (p.gold == GoldClass::kMatch ? has_match : has_noise) = true;
    values.push_back(p.entropy);
  }
  if (!has_match || !has_noise) {
    throw std::invalid_argument("select_entropy_threshold: need at least one match and one noise point");
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  // The lower extreme stands for "everything is noise"; every other
  // candidate classifies entropy > t as noise.
  auto correct_at = [&](double t, bool all_noise) {
    std::size_t correct = 0;
    for (const auto& p : points) {
      const bool noise = all_noise || p.entropy > t;
      if (noise == (p.gold == GoldClass::kNoise)) ++correct;
    }
    return correct;
  };
  std::vector<std::pair<double, std::size_t>> candidates;
  candidates.emplace_back(values.front(), correct_at(values.front(), true));
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const double mid = (values[i] + values[i + 1]) / 2.0;
    candidates.emplace_back(mid, correct_at(mid, false));
  }
  candidates.emplace_back(values.back(), correct_at(values.back(), false));

  std::size_t best = 0;
  for (const auto& c : candidates) best = std::max(best, c.second);
  double lo = 0.0;
  double hi = 0.0;
  bool first = true;
  for (const auto& [t, n] : candidates) {
    if (n != best) continue;
    if (first) {
      lo = hi = t;
      first = false;
    }
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  return (lo + hi) / 2.0;
}

std::string predicted_class(const Judgment& j) {
  return j.matched() ? j.label : std::string(kNoAnswerClass);
}

double f1_score(std::span<const std::string> predicted, std::span<const std::string> gold, F1Average average) {
  if (predicted.size() != gold.size()) throw std::invalid_argument("f1_score: length mismatch");
  if (gold.empty()) throw std::invalid_argument("f1_score: empty input");
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0, support = 0;
  };
  std::map<std::string, Counts, std::less<>> classes;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++classes[gold[i]].support;
    if (predicted[i] == gold[i]) {
      ++classes[gold[i]].tp;
    } else {
      ++classes[predicted[i]].fp;
      ++classes[gold[i]].fn;
    }
  }
  auto f1 = [](std::size_t tp, std::size_t fp, std::size_t fn) {
    const double denom = static_cast<double>(2 * tp + fp + fn);
    return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
  };
  if (average == F1Average::kMicro) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& [name, c] : classes) {
      tp += c.tp;
      fp += c.fp;
      fn += c.fn;
    }
    return f1(tp, fp, fn);
  }
  double sum = 0.0;
  double weight = 0.0;
  for (const auto& [name, c] : classes) {
    const double w = average == F1Average::kMacro ? 1.0 : static_cast<double>(c.support);
    sum += w * f1(c.tp, c.fp, c.fn);
    weight += w;
  }
  return sum / weight;
}

BootstrapSummary bootstrap_f1(std::span<const Judgment> predictions, std::span<const std::string> gold,
                              int iterations, std::uint64_t rng_seed, F1Average average) {
  if (predictions.size() != gold.size()) throw std::invalid_argument("bootstrap_f1: length mismatch");
  if (gold.empty()) throw std::invalid_argument("bootstrap_f1: empty input");
  if (iterations < 1) throw std::invalid_argument("bootstrap_f1: iterations must be positive");
  std::vector<std::string> pred;
  pred.reserve(predictions.size());
  for (const auto& j : predictions) pred.push_back(predicted_class(j));

  const std::size_t n = gold.size();
  Rng rng(rng_seed);
  BootstrapSummary out;
  out.samples.reserve(static_cast<std::size_t>(iterations));
  std::vector<std::string> p_s(n), g_s(n);
  for (int b = 0; b < iterations; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = uniform_index(rng, n);
      p_s[i] = pred[k];
      g_s[i] = gold[k];
    }
    out.samples.push_back(f1_score(p_s, g_s, average));
  }
  std::vector<double> sorted = out.samples;
  std::sort(sorted.begin(), sorted.end());
  out.mean = mean(out.samples);
  out.q01 = quantile_linear(sorted, 0.01);
  out.q99 = quantile_linear(sorted, 0.99);
  return out;
}

}  // namespace psyrig
