#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "psyrig/analysis.hpp"
#include "psyrig/connectors.hpp"
#include "psyrig/experiment.hpp"
#include "psyrig/export.hpp"
#include "psyrig/judge_data.hpp"
#include "psyrig/postprocess.hpp"
#include "psyrig/runner.hpp"

namespace psyrig::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kFailure = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void print_violations(const std::vector<Violation>& violations) {
  for (const auto& v : violations) fmt::print(stderr, "{}: {}\n", v.path.empty() ? "<root>" : v.path, v.message);
}

// ---- validate --------------------------------------------------------------

struct ValidateArgs {
  std::string config;
};

int cmd_validate(const ValidateArgs& a) {
  ExperimentConfig cfg;
  try {
    cfg = load_experiment_config(a.config, false);
  } catch (const ConfigError& e) {
    if (!e.violations().empty()) {
      print_violations(e.violations());
    } else {
      fmt::print(stderr, "{}: {}\n", e.path().empty() ? "<root>" : e.path(), e.what());
    }
    return kInvalid;
  }
  const auto violations = validate_config(cfg);
  if (!violations.empty()) {
    print_violations(violations);
    fmt::print("{}: {} violation(s)\n", a.config, violations.size());
    return kInvalid;
  }
  fmt::print("{}: ok ({} tasks)\n", a.config, enumerate_run_plan(cfg).size());
  return kOk;
}

// ---- run ---------------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::string out;
  int parallelism = 1;
  bool resume = false;
  std::optional<std::int64_t> seed;
  std::string variant;
};

int cmd_run(const RunArgs& a) {
  ExperimentConfig cfg = load_experiment_config(a.config);
  if (a.seed) cfg.seeds = {*a.seed};
  if (!a.variant.empty()) cfg.prompt.variant = *parse_prompt_variant(a.variant);

  std::vector<RunTask> plan = enumerate_run_plan(cfg);
  const std::size_t full = plan.size();
  std::error_code ec;
  if (a.resume) {
    plan = resume_plan(plan, fs::path(a.out));
    fmt::print("resuming: {} of {} tasks remain\n", plan.size(), full);
  } else if (fs::exists(a.out, ec) && fs::file_size(a.out, ec) > 0) {
    throw UsageError(a.out + " already exists; pass --resume to continue it or choose another --out");
  }

  JsonlSink sink(a.out);
  RunOptions options;
  options.parallelism = a.parallelism;
  const RunSummary s = execute_plan(plan, cfg, sink, options);
  fmt::print("attempted {} succeeded {} failed {} in {} ms\n", s.attempted, s.succeeded, s.failed, s.wall_clock_ms);
  if (s.failed > 0) spdlog::warn("{} generation(s) failed; rerun with --resume to retry them", s.failed);
  return kOk;
}

// ---- postprocess -------------------------------------------------------------

struct PostprocessArgs {
  std::string config;
  std::string in;
  std::string out;
  std::string judge = "rule";
  std::optional<double> entropy_threshold;
  std::string rates_out;
  std::vector<std::string> action_labels;
};

// "label" applies to every question, "qid=label" to one question.
std::map<std::string, std::string> parse_action_labels(const std::vector<std::string>& specs) {
  std::map<std::string, std::string> out;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      out[""] = spec;
    } else {
      out[spec.substr(0, eq)] = spec.substr(eq + 1);
    }
  }
  return out;
}

std::vector<std::string> rate_row(const std::string& model, const std::string& question,
                                  std::span<const ResponseRecord> records,
                                  const std::map<std::string, std::string>& action_labels) {
  const RateMetrics m = rate_metrics(records);
  std::vector<std::string> row{model, question, std::to_string(records.size()), format_number(m.invalid_pct),
                               format_number(m.rejected_pct), format_number(m.na_pct)};
  if (action_labels.empty()) return row;
  std::size_t usable = 0;
  std::size_t acted = 0;
  bool labelled = true;
  for (const auto& r : records) {
    auto it = action_labels.find(r.task.question_id);
    if (it == action_labels.end()) it = action_labels.find("");
    if (it == action_labels.end()) {
      labelled = false;
      break;
    }
    if (!r.judgment || !r.judgment->matched()) continue;
    ++usable;
    if (r.judgment->label == it->second) ++acted;
  }
  row.push_back(labelled && usable > 0 ? format_number(100.0 * static_cast<double>(acted) / static_cast<double>(usable))
                                       : "");
  return row;
}

int cmd_postprocess(const PostprocessArgs& a) {
  const ExperimentConfig cfg = load_experiment_config(a.config);
  auto decoded = read_raw_responses(a.in);
  for (const auto& w : decoded.warnings) spdlog::warn("{}: {}", a.in, w);

  std::unordered_map<std::string, std::size_t> plan_index;
  const auto plan = enumerate_run_plan(cfg);
  for (std::size_t i = 0; i < plan.size(); ++i) plan_index.emplace(plan[i].key(), i);

  std::size_t skipped_failed = 0;
  std::size_t skipped_dup = 0;
  std::map<std::pair<std::size_t, std::string>, const RawResponse*> ordered;
  for (const auto& r : decoded.records) {
    if (!r.ok()) {
      ++skipped_failed;
      continue;
    }
    const std::string key = r.task.key();
    auto it = plan_index.find(key);
    const std::size_t pos = it == plan_index.end() ? plan.size() : it->second;
    if (!ordered.emplace(std::make_pair(pos, key), &r).second) ++skipped_dup;
  }
  if (skipped_failed > 0) spdlog::warn("skipped {} failed generation(s)", skipped_failed);
  if (skipped_dup > 0) spdlog::warn("skipped {} duplicate record(s)", skipped_dup);

  JudgeSetup setup;
  setup.method = a.judge == "model" ? JudgeMethod::kModel : JudgeMethod::kRule;
  setup.entropy_threshold = a.entropy_threshold.value_or(cfg.judge.entropy_threshold);
  setup.entropy_base = cfg.judge.entropy_base;
  setup.refusal_phrases = cfg.judge.refusal_phrases;
  std::unique_ptr<HttpProbabilityProvider> provider;
  if (setup.method == JudgeMethod::kModel) {
    if (!cfg.judge.probability_provider) {
      throw UsageError("--judge model needs judge.probability_provider in the config");
    }
    provider = std::make_unique<HttpProbabilityProvider>(*cfg.judge.probability_provider, make_http_transport());
    setup.provider = provider.get();
  }

  std::vector<ResponseRecord> records;
  records.reserve(ordered.size());
  for (const auto& [pos, raw] : ordered) {
    const QuestionItem* item = cfg.questionnaire.find_question(raw->task.question_id);
    if (!item) throw DataError("record references unknown question " + raw->task.question_id);
    ProcessedText p = process_text(raw->text, cfg.questionnaire.effective_options(*item), setup);
    records.push_back({raw->task, raw->text, std::move(p.cleaned), std::move(p.extracted_answer),
                       std::move(p.validity), std::move(p.judgment), raw->generated_at_ms});
  }
  write_response_records(a.out, records);

  if (records.empty()) {
    fmt::print("processed 0 records\n");
    return kOk;
  }
  const RateMetrics m = rate_metrics(records);
  fmt::print("processed {} records: invalid {}% rejected {}% na {}%\n", records.size(), format_number(m.invalid_pct),
             format_number(m.rejected_pct), format_number(m.na_pct));
  if (!a.rates_out.empty()) {
    const auto actions = parse_action_labels(a.action_labels);
    CsvTable t;
    t.header = {"model_id", "question_id", "n", "invalid_pct", "rejected_pct", "na_pct"};
    if (!actions.empty()) t.header.push_back("action_pct");
    for (const auto& model : cfg.models) {
      std::vector<ResponseRecord> subset;
      for (const auto& r : records) {
        if (r.task.model_id == model.id) subset.push_back(r);
      }
      if (subset.empty()) continue;
      t.rows.push_back(rate_row(model.id, "all", subset, actions));
      for (const auto& item : cfg.questionnaire.questions) {
        std::vector<ResponseRecord> per_question;
        for (const auto& r : subset) {
          if (r.task.question_id == item.id) per_question.push_back(r);
        }
        if (!per_question.empty()) t.rows.push_back(rate_row(model.id, item.id, per_question, actions));
      }
    }
    write_csv(a.rates_out, t);
  }
  return kOk;
}

// ---- score / report ------------------------------------------------------------

struct ScoreArgs {
  std::string config;
  std::string in;
  std::string out;
};

int cmd_score(const ScoreArgs& a) {
  const ExperimentConfig cfg = load_experiment_config(a.config);
  auto decoded = read_response_records(a.in);
  for (const auto& w : decoded.warnings) spdlog::warn("{}: {}", a.in, w);
  if (cfg.questionnaire.scales.empty()) spdlog::warn("questionnaire {} defines no scales", cfg.questionnaire.id);
  const auto scores = score_records(decoded.records, cfg.questionnaire);
  write_csv(a.out, score_table(scores));
  fmt::print("wrote {} scale scores\n", scores.size());
  return kOk;
}

struct ReportArgs {
  std::string config;
  std::string in;
  std::string out;
  std::vector<std::string> group_by{"model"};
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::optional<double> level;
};

int cmd_report(const ReportArgs& a) {
  StatConfig stats;
  if (!a.config.empty()) stats = load_experiment_config(a.config).stats;
  if (a.seed) stats.rng_seed = *a.seed;
  if (a.iterations) stats.bootstrap_iterations = *a.iterations;
  if (a.level) stats.confidence_level = *a.level;
  std::vector<GroupKey> keys;
  for (const auto& g : a.group_by) {
    auto k = parse_group_key(g);
    if (!k) throw UsageError("unknown group key '" + g + "' (expected model, group, gender, scale or persona)");
    keys.push_back(*k);
  }
  const auto scores = parse_score_table(read_csv(a.in));
  if (scores.empty()) throw DataError(a.in + " holds no scores");
  const CsvTable t = report_table(scores, keys, stats);
  write_csv(a.out, t);
  fmt::print("wrote {} report rows\n", t.rows.size());
  return kOk;
}

// ---- judge-data --------------------------------------------------------------------

std::vector<json> read_json_lines(const std::string& path) {
  auto lines = read_jsonl_lines(path);
  for (const auto& w : lines.warnings) spdlog::warn("{}: {}", path, w);
  std::vector<json> out;
  for (std::size_t i = 0; i < lines.lines.size(); ++i) {
    auto j = json::parse(lines.lines[i], nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DataError(path + ": record " + std::to_string(i + 1) + " is not a JSON object", i + 1);
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<JudgePair> read_pairs(const std::string& path) {
  auto lines = read_jsonl_lines(path);
  for (const auto& w : lines.warnings) spdlog::warn("{}: {}", path, w);
  std::vector<JudgePair> out;
  for (std::size_t i = 0; i < lines.lines.size(); ++i) {
    try {
      out.push_back(decode_judge_pair(lines.lines[i]));
    } catch (const DataError& e) {
      throw DataError(path + ": record " + std::to_string(i + 1) + ": " + e.what(), i + 1);
    }
  }
  return out;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& l : lines) {
    text += l;
    text += '\n';
  }
  write_text_file(path, text);
}

void write_pairs(const std::string& path, std::span<const JudgePair> pairs) {
  std::vector<std::string> lines;
  lines.reserve(pairs.size());
  for (const auto& p : pairs) lines.push_back(encode_judge_pair(p));
  write_lines(path, lines);
}

struct SeedPairsArgs {
  std::string templates;
  std::string questionnaire;
  std::string question;
  std::string out;
};

int cmd_seed_pairs(const SeedPairsArgs& a) {
  const Questionnaire q = load_questionnaire(a.questionnaire);
  std::span<const AnswerOption> options;
  if (!a.question.empty()) {
    const QuestionItem* item = q.find_question(a.question);
    if (!item) throw UsageError("questionnaire has no question '" + a.question + "'");
    options = q.effective_options(*item);
  } else if (q.global_options) {
    options = *q.global_options;
  } else if (!q.questions.empty()) {
    options = q.effective_options(q.questions.front());
  }
  const auto templates = load_lines(a.templates);
  const auto pairs = generate_seed_pairs(templates, options);
  write_pairs(a.out, pairs);
  fmt::print("wrote {} pairs ({} templates x {} options)\n", pairs.size(), templates.size(), options.size());
  return kOk;
}

struct NegativesArgs {
  std::string in;
  std::string out;
  int ratio = 3;
  std::uint64_t seed = 0;
};

int cmd_negatives(const NegativesArgs& a) {
  std::vector<JudgePair> positives;
  for (auto& p : read_pairs(a.in)) {
    if (p.label == PairLabel::kCorresponds) positives.push_back(std::move(p));
  }
  const auto negatives = sample_negatives(positives, a.ratio, a.seed);
  write_pairs(a.out, negatives);
  fmt::print("wrote {} negatives for {} positives\n", negatives.size(), positives.size());
  return kOk;
}

struct ParaphraseArgs {
  std::string in;
  std::string strategies;
  std::string out;
  int k = 5;
  std::uint64_t seed = 0;
};

int cmd_paraphrase_prompts(const ParaphraseArgs& a) {
  const auto pairs = read_pairs(a.in);
  const auto strategies = load_lines(a.strategies);
  const auto prompts = build_paraphrase_prompts(pairs, strategies, a.k, a.seed);
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    ordered_json j;
    j["option_display"] = pairs[i].option_display;
    j["statement"] = pairs[i].response_text;
    j["system"] = prompts[i].system;
    j["user"] = prompts[i].user;
    lines.push_back(j.dump(-1, ' ', false, json::error_handler_t::replace));
  }
  write_lines(a.out, lines);
  fmt::print("wrote {} paraphrase prompts\n", prompts.size());
  return kOk;
}

struct FilterArgs {
  std::string in;
  std::string out;
  double percentile = 25.0;
};

int cmd_filter(const FilterArgs& a) {
  std::vector<std::pair<JudgePair, double>> scored;
  const auto records = read_json_lines(a.in);
  for (std::size_t i = 0; i < records.size(); ++i) {
    json j = records[i];
    if (!j.contains("similarity") || !j["similarity"].is_number()) {
      throw DataError(a.in + ": record " + std::to_string(i + 1) + " lacks a numeric similarity", i + 1);
    }
    const double s = j["similarity"].get<double>();
    j.erase("similarity");
    scored.emplace_back(decode_judge_pair(j.dump()), s);
  }
  const auto kept = filter_by_similarity(scored, a.percentile);
  write_pairs(a.out, kept);
  fmt::print("kept {} of {} pairs\n", kept.size(), scored.size());
  return kOk;
}

struct ThresholdArgs {
  std::string in;
};

int cmd_threshold(const ThresholdArgs& a) {
  std::vector<LabeledEntropy> points;
  const auto records = read_json_lines(a.in);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& j = records[i];
    if (!j.contains("entropy") || !j["entropy"].is_number() || !j.contains("gold") || !j["gold"].is_string()) {
      throw DataError(a.in + ": record " + std::to_string(i + 1) + " needs numeric 'entropy' and string 'gold'", i + 1);
    }
    const std::string gold = j["gold"].get<std::string>();
    if (gold != "match" && gold != "noise") throw DataError(a.in + ": gold must be 'match' or 'noise'", i + 1);
    points.push_back({j["entropy"].get<double>(), gold == "match" ? GoldClass::kMatch : GoldClass::kNoise});
  }
  fmt::print("{}\n", format_number(select_entropy_threshold(points)));
  return kOk;
}

struct F1Args {
  std::string in;
  std::string out;
  int iterations = 1000;
  std::uint64_t seed = 0;
  std::string average = "macro";
};

int cmd_f1(const F1Args& a) {
  std::vector<Judgment> predictions;
  std::vector<std::string> gold;
  const auto records = read_json_lines(a.in);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& j = records[i];
    if (!j.contains("gold") || !j["gold"].is_string() || !j.contains("verdict") || !j["verdict"].is_string()) {
      throw DataError(a.in + ": record " + std::to_string(i + 1) + " needs string 'gold' and 'verdict'", i + 1);
    }
    Judgment p;
    const std::string verdict = j["verdict"].get<std::string>();
    if (verdict == "matched") {
      p.verdict = Verdict::kMatched;
      p.label = j.value("label", "");
    } else if (verdict == "inconclusive") {
      p.verdict = Verdict::kInconclusive;
    } else if (verdict == "not-present") {
      p.verdict = Verdict::kNotPresent;
    } else {
      throw DataError(a.in + ": unknown verdict '" + verdict + "'", i + 1);
    }
    predictions.push_back(std::move(p));
    gold.push_back(j["gold"].get<std::string>());
  }
  F1Average avg = F1Average::kMacro;
  if (a.average == "micro") avg = F1Average::kMicro;
  if (a.average == "weighted") avg = F1Average::kWeighted;
  const auto summary = bootstrap_f1(predictions, gold, a.iterations, a.seed, avg);
  ordered_json j;
  j["average"] = to_string(avg);
  j["iterations"] = a.iterations;
  j["mean"] = summary.mean;
  j["q01"] = summary.q01;
  j["q99"] = summary.q99;
  if (!a.out.empty()) {
    ordered_json full = j;
    full["samples"] = summary.samples;
    write_text_file(a.out, full.dump(2) + "\n");
  }
  fmt::print("{}\n", j.dump());
  return kOk;
}

int guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    if (!e.violations().empty()) {
      print_violations(e.violations());
    } else {
      fmt::print(stderr, "config error at {}: {}\n", e.path().empty() ? "<root>" : e.path(), e.what());
    }
    return kInvalid;
  } catch (const UsageError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFailure;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFailure;
  }
}

}  // namespace

int run(int argc, const char* const* argv) {
  static bool logger_ready = false;
  if (!logger_ready) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("psyrig"));
    logger_ready = true;
  }
  spdlog::set_level(spdlog::level::info);

  CLI::App app{"Administer psychometric questionnaires to language models and score the answers."};
  app.name("psyrig");
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  std::function<int()> action;

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Check an experiment file and report every violation");
  validate->add_option("--config,config", va.config, "Experiment file")->required()->check(CLI::ExistingFile);
  validate->callback([&] { action = [&] { return cmd_validate(va); }; });

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "Generate responses for every task of the run plan");
  run_cmd->add_option("--config,config", ra.config, "Experiment file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", ra.out, "Raw response JSONL sink")->required();
  run_cmd->add_option("--parallelism", ra.parallelism, "Generations in flight")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--resume", ra.resume, "Skip tasks that already succeeded in --out");
  run_cmd->add_option("--seed", ra.seed, "Replace the configured seeds with this one");
  run_cmd->add_option("--variant", ra.variant, "Prompt variant override")
      ->check(CLI::IsMember({"natural", "friendly", "json"}));
  run_cmd->callback([&] { action = [&] { return cmd_run(ra); }; });

  PostprocessArgs pa;
  auto* post = app.add_subcommand("postprocess", "Clean, validate and judge raw responses");
  post->add_option("--in,input", pa.in, "Raw response JSONL")->required()->check(CLI::ExistingFile);
  post->add_option("--config", pa.config, "Experiment file")->required()->check(CLI::ExistingFile);
  post->add_option("--out", pa.out, "Processed record JSONL")->required();
  post->add_option("--judge", pa.judge, "Judge method")->check(CLI::IsMember({"rule", "model"}));
  post->add_option("--entropy-threshold", pa.entropy_threshold, "Override judge.entropy_threshold")
      ->check(CLI::NonNegativeNumber);
  post->add_option("--rates-out", pa.rates_out, "Write invalid/rejected/na rates per model as CSV");
  post->add_option("--action-label", pa.action_labels,
                   "Option label counted as taking action, as LABEL or QUESTION=LABEL (adds action_pct)")
      ->delimiter(',');
  post->callback([&] { action = [&] { return cmd_postprocess(pa); }; });

  ScoreArgs sa;
  auto* score = app.add_subcommand("score", "Score processed records into scale values");
  score->add_option("--in,input", sa.in, "Processed record JSONL")->required()->check(CLI::ExistingFile);
  score->add_option("--config", sa.config, "Experiment file")->required()->check(CLI::ExistingFile);
  score->add_option("--out", sa.out, "Score CSV")->required();
  score->callback([&] { action = [&] { return cmd_score(sa); }; });

  ReportArgs rpa;
  auto* report = app.add_subcommand("report", "Aggregate scale scores with bootstrap confidence intervals");
  report->add_option("--in,input", rpa.in, "Score CSV")->required()->check(CLI::ExistingFile);
  report->add_option("--out", rpa.out, "Report CSV")->required();
  report->add_option("--config", rpa.config, "Take bootstrap settings from this experiment file")
      ->check(CLI::ExistingFile);
  report->add_option("--group-by", rpa.group_by, "Comma-separated keys: model, group, gender, scale, persona")
      ->delimiter(',');
  report->add_option("--seed", rpa.seed, "Bootstrap RNG seed");
  report->add_option("--iterations", rpa.iterations, "Bootstrap iterations")->check(CLI::PositiveNumber);
  report->add_option("--level", rpa.level, "Confidence level")->check(CLI::Range(0.0, 1.0));
  report->callback([&] { action = [&] { return cmd_report(rpa); }; });

  auto* jd = app.add_subcommand("judge-data", "Build and evaluate data for the model-based judge");
  jd->require_subcommand(1);

  SeedPairsArgs spa;
  auto* seed_pairs = jd->add_subcommand("seed-pairs", "Fill response templates with every answer option");
  seed_pairs->add_option("--templates", spa.templates, "Template file, one per line")->required()->check(CLI::ExistingFile);
  seed_pairs->add_option("--questionnaire", spa.questionnaire, "Questionnaire JSON")->required()->check(CLI::ExistingFile);
  seed_pairs->add_option("--question", spa.question, "Question whose options to use (default: global options)");
  seed_pairs->add_option("--out", spa.out, "Pair JSONL")->required();
  seed_pairs->callback([&] { action = [&] { return cmd_seed_pairs(spa); }; });

  NegativesArgs na;
  auto* negatives = jd->add_subcommand("negatives", "Sample non-corresponding pairs from positives");
  negatives->add_option("--in", na.in, "Pair JSONL")->required()->check(CLI::ExistingFile);
  negatives->add_option("--out", na.out, "Negative pair JSONL")->required();
  negatives->add_option("--ratio", na.ratio, "Negatives per positive")->check(CLI::PositiveNumber);
  negatives->add_option("--seed", na.seed, "RNG seed");
  negatives->callback([&] { action = [&] { return cmd_negatives(na); }; });

  ParaphraseArgs ppa;
  auto* para = jd->add_subcommand("paraphrase-prompts", "Build paraphrase prompts with sampled strategies");
  para->add_option("--in", ppa.in, "Pair JSONL")->required()->check(CLI::ExistingFile);
  para->add_option("--strategies", ppa.strategies, "Strategy file, one per line")->required()->check(CLI::ExistingFile);
  para->add_option("--out", ppa.out, "Prompt JSONL")->required();
  para->add_option("--k", ppa.k, "Strategies per prompt")->check(CLI::PositiveNumber);
  para->add_option("--seed", ppa.seed, "RNG seed");
  para->callback([&] { action = [&] { return cmd_paraphrase_prompts(ppa); }; });

  FilterArgs fa;
  auto* filter = jd->add_subcommand("filter", "Drop pairs below a similarity percentile");
  filter->add_option("--in", fa.in, "Pair JSONL with a numeric similarity field")->required()->check(CLI::ExistingFile);
  filter->add_option("--out", fa.out, "Kept pair JSONL")->required();
  filter->add_option("--percentile", fa.percentile, "Percentile in [0, 100]")->check(CLI::Range(0.0, 100.0));
  filter->callback([&] { action = [&] { return cmd_filter(fa); }; });

  ThresholdArgs ta;
  auto* threshold = jd->add_subcommand("threshold", "Pick the entropy threshold with maximal accuracy");
  threshold->add_option("--in", ta.in, "JSONL of {entropy, gold: match|noise}")->required()->check(CLI::ExistingFile);
  threshold->callback([&] { action = [&] { return cmd_threshold(ta); }; });

  F1Args f1a;
  auto* f1 = jd->add_subcommand("f1", "Bootstrap F1 of judged predictions against gold labels");
  f1->add_option("--in", f1a.in, "JSONL of {gold, verdict, label}")->required()->check(CLI::ExistingFile);
  f1->add_option("--out", f1a.out, "Write the summary with all samples as JSON");
  f1->add_option("--iterations", f1a.iterations, "Bootstrap iterations")->check(CLI::PositiveNumber);
  f1->add_option("--seed", f1a.seed, "RNG seed");
  f1->add_option("--average", f1a.average, "F1 averaging")->check(CLI::IsMember({"macro", "micro", "weighted"}));
  f1->callback([&] { action = [&] { return cmd_f1(f1a); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kFailure;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);
  if (quiet) spdlog::set_level(spdlog::level::warn);
  if (!action) return kFailure;
  return guarded(action);
}

}  // namespace psyrig::cli
