#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "judge_oracle.hpp"
#include "psyrig/analysis.hpp"
#include "psyrig/judge_data.hpp"
#include "psyrig/prompt.hpp"
#include "psyrig/runner.hpp"
#include "stat_oracles.hpp"
#include "test_support.hpp"

using namespace psyrig;
using Stopwatch = std::chrono::steady_clock;

namespace {

constexpr double kEntropyTolerance = 1e-12;
constexpr double kStatTolerance = 0.0;
constexpr double kRateTolerance = 0.0;
constexpr double kShippedThreshold = 0.359;
constexpr auto kFastBudget = std::chrono::seconds(1);
constexpr auto kBdiBudget = std::chrono::seconds(10);
constexpr int kResumeTrials = 20;
constexpr int kNegativeSeeds = 10;

// Collects the first failure of a criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failure_.empty()) failure_ = what;
  }
  bool ok() const { return failure_.empty(); }
  const std::string& failure() const { return failure_; }

 private:
  std::string failure_;
};

bool within(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

std::string criterion_prompts(Check& c) {
  struct Case {
    const char* name;
    const char* questionnaire;
    const char* question_id;
    Persona persona;
  };
  const Case cases[] = {
      {"rfq_q1", "rfq", "q1", {"Ms.", "Kim", "asian"}},
      {"bfi_q1", "bfi", "q1", {"Mr.", "Garcia", "hispanic"}},
      {"gsdb_q1", "gsdb", "q1", {"Ms.", "Tsosie", "native_american"}},
      {"trolley_classic", "trolley", "classic", {"Mr.", "Olson", "white"}},
      {"bdi_q1", "bdi", "q1", {"Ms.", "Diallo", "black"}},
  };
  const auto start = Stopwatch::now();
  for (const auto& k : cases) {
    const Questionnaire q = test::questionnaire(k.questionnaire);
    const QuestionItem* item = q.find_question(k.question_id);
    c.expect(item != nullptr, std::string("missing question ") + k.question_id);
    if (!item) continue;
    const PromptPair p = render_prompt({}, k.persona, q, *item);
    const auto dir = test::fixture_dir() / "prompts";
    c.expect(p.system == test::slurp(dir / (std::string(k.name) + ".system.txt")), std::string(k.name) + " system differs");
    c.expect(p.user == test::slurp(dir / (std::string(k.name) + ".user.txt")), std::string(k.name) + " user differs");
  }
  const auto took = Stopwatch::now() - start;
  c.expect(took < kFastBudget, "over 1 s");
  return fmt::format("5 json-variant goldens byte-equal in {} ms",
                     std::chrono::duration_cast<std::chrono::milliseconds>(took).count());
}

std::string criterion_plan_counts(Check& c) {
  const std::pair<const char*, std::size_t> want[] = {
      {"rfq", 2750}, {"bfi", 11000}, {"gsdb", 5750}, {"trolley", 750}, {"bdi", 5250}};
  const auto start = Stopwatch::now();
  std::string got;
  for (const auto& [name, count] : want) {
    const auto cfg = load_experiment_config(test::config_dir() / (std::string(name) + ".json"));
    c.expect(expand_personas(cfg.personas).size() == 250, std::string(name) + " persona count");
    const std::size_t per_model = enumerate_run_plan(cfg).size() / cfg.models.size();
    c.expect(per_model == count, fmt::format("{}: {} != {}", name, per_model, count));
    got += fmt::format("{}{}={}", got.empty() ? "" : " ", name, per_model);
  }
  const auto took = Stopwatch::now() - start;
  c.expect(took < kFastBudget, "over 1 s");
  return got;
}

std::string criterion_rule_judge(Check& c) {
  const auto options = test::corpus_options();
  const auto corpus = test::judge_corpus();
  c.expect(corpus.size() == 50, "corpus size");
  std::size_t agree = 0;
  for (const auto& text : corpus) {
    const Judgment j = judge_rule_based(text, options);
    const auto want = test::brute_force_judge(text, options);
    bool same = j.verdict == want.verdict && j.label == want.label;
    for (std::size_t i = 0; i < options.size(); ++i) {
      same = same && j.scores[i].value == static_cast<double>(test::brute_force_count(text, options[i]));
    }
    agree += same;
  }
  c.expect(agree == corpus.size(), fmt::format("{} of {} agree", agree, corpus.size()));
  const auto neg = judge_rule_based("My answer is neither Option 1 nor 4. My answer is Item 5.", options);
  const std::vector<double> counts{1, 0, 0, 1, 1};
  c.expect(neg.verdict == Verdict::kInconclusive, "negation example not inconclusive");
  for (std::size_t i = 0; i < counts.size(); ++i) c.expect(neg.scores[i].value == counts[i], "negation counts");
  return fmt::format("{}/{} agree with the brute-force counter, negation example inconclusive", agree, corpus.size());
}

std::string criterion_entropy(Check& c) {
  double worst = 0.0;
  for (int n = 2; n <= 10; ++n) {
    const std::vector<double> u(static_cast<std::size_t>(n), 1.0 / n);
    worst = std::max(worst, std::fabs(entropy(u) - std::log(static_cast<double>(n))));
  }
  c.expect(worst <= kEntropyTolerance, fmt::format("max |H - ln n| = {}", worst));
  c.expect(JudgeSetup{}.entropy_threshold == kShippedThreshold, "shipped default threshold");
  std::vector<LabeledProbability> uniform;
  std::vector<LabeledProbability> dominant;
  for (int i = 1; i <= 5; ++i) {
    uniform.push_back({std::to_string(i), 0.2});
    dominant.push_back({std::to_string(i), i == 3 ? 0.99 : 0.0025});
  }
  const Judgment u = judge_model_based(uniform, kShippedThreshold);
  const Judgment d = judge_model_based(dominant, kShippedThreshold);
  c.expect(u.verdict == Verdict::kNotPresent, "uniform case accepted");
  c.expect(d.verdict == Verdict::kMatched && d.label == "3", "dominant case rejected");
  return fmt::format("max |H(uniform n) - ln n| = {:.1e}, uniform rejected, 0.99-dominant accepted", worst);
}

std::string criterion_threshold(Check& c) {
  const std::vector<LabeledEntropy> separable{{0.05, GoldClass::kMatch}, {0.2, GoldClass::kMatch},
                                              {0.3, GoldClass::kMatch},  {0.6, GoldClass::kNoise},
                                              {1.1, GoldClass::kNoise},  {1.6, GoldClass::kNoise}};
  const double t = select_entropy_threshold(separable);
  c.expect(t == test::ref_entropy_threshold(separable), "separable fixture differs from oracle");
  c.expect(t == (0.3 + 0.6) / 2.0, "separable fixture midpoint");
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> steps(0, 64);
  std::uniform_int_distribution<int> size(2, 30);
  std::bernoulli_distribution coin(0.5);
  int held = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<LabeledEntropy> pts;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) pts.push_back({steps(rng) / 32.0, coin(rng) ? GoldClass::kMatch : GoldClass::kNoise});
    pts.push_back({steps(rng) / 32.0, GoldClass::kMatch});
    pts.push_back({steps(rng) / 32.0, GoldClass::kNoise});
    const double base = select_entropy_threshold(pts);
    const double shift = steps(rng) / 8.0;
    auto moved = pts;
    for (auto& p : moved) p.entropy += shift;
    held += base == test::ref_entropy_threshold(pts) && select_entropy_threshold(moved) == base + shift;
  }
  c.expect(held == 100, fmt::format("{} of 100 fixtures hold", held));
  return fmt::format("separable t = {} equals oracle, translation holds on {}/100 fixtures", t, held);
}

// Answers each question with the option whose text sits at `position` of the
// standard questionnaire, using the label the presented questionnaire gives it.
MockScript fixed_semantic_mock(const Questionnaire& standard, const Questionnaire& presented, std::size_t position) {
  MockScript script;
  for (std::size_t i = 0; i < standard.questions.size(); ++i) {
    const std::string& text = (*standard.questions[i].options)[position].text;
    for (const auto& o : *presented.questions[i].options) {
      if (o.text == text) {
        script.rules.push_back({presented.questions[i].id, std::nullopt, "{\"answer\": \"" + o.label + "\"}", std::nullopt});
      }
    }
  }
  script.default_response = "no idea";
  return script;
}

std::vector<ResponseRecord> run_and_judge(const Questionnaire& q, const MockScript& mock) {
  ExperimentConfig cfg;
  cfg.name = "bdi-invariant";
  cfg.seeds = {1};
  ModelSpec m;
  m.id = "fixed";
  m.mock = mock;
  cfg.models.push_back(m);
  cfg.personas.source = std::vector<Persona>{{"Ms.", "Diallo", "black"}, {"Mr.", "Olson", "white"}};
  cfg.questionnaire = q;
  MemorySink sink;
  execute_plan(enumerate_run_plan(cfg), cfg, sink);
  std::vector<ResponseRecord> out;
  for (const auto& raw : sink.records()) {
    const QuestionItem* item = q.find_question(raw.task.question_id);
    ProcessedText p = process_text(raw.text, q.effective_options(*item), JudgeSetup{});
    out.push_back({raw.task, raw.text, p.cleaned, p.extracted_answer, p.validity, p.judgment, 0});
  }
  return out;
}

std::string criterion_bdi(Check& c) {
  const auto start = Stopwatch::now();
  const Questionnaire standard = test::questionnaire("bdi");
  const Questionnaire reversed = test::questionnaire("bdi_reversed");
  std::string sums;
  for (std::size_t pos = 0; pos < 4; ++pos) {
    const auto std_records = run_and_judge(standard, fixed_semantic_mock(standard, standard, pos));
    const auto rev_records = run_and_judge(reversed, fixed_semantic_mock(standard, reversed, pos));
    const auto std_scores = score_records(std_records, standard);
    const auto rev_scores = score_records(rev_records, reversed);
    std::map<std::string, int> via_formula;
    for (const auto& r : rev_records) {
      c.expect(r.judgment && r.judgment->matched(), "reversed response not matched");
      if (r.judgment && r.judgment->matched()) via_formula[r.task.persona.render()] += invert_bdi_score(std::stoi(r.judgment->label));
    }
    c.expect(std_scores.size() == 2 && rev_scores.size() == 2, "score count");
    for (std::size_t i = 0; i < std_scores.size() && i < rev_scores.size(); ++i) {
      const double s = std_scores[i].value;
      c.expect(s == 21.0 * static_cast<double>(pos), fmt::format("position {} standard sum {}", pos, s));
      c.expect(rev_scores[i].value == s, fmt::format("position {} reversed sum {}", pos, rev_scores[i].value));
      c.expect(via_formula[std_scores[i].persona.render()] == s, fmt::format("position {} inverted sum", pos));
    }
    sums += fmt::format("{}{}", sums.empty() ? "" : "/", std_scores.empty() ? -1.0 : std_scores[0].value);
  }
  const auto took = Stopwatch::now() - start;
  c.expect(took < kBdiBudget, "over 10 s");
  return fmt::format("standard = reversed = inverted sums {} at positions 0..3 in {} ms", sums,
                     std::chrono::duration_cast<std::chrono::milliseconds>(took).count());
}

std::string criterion_bootstrap(Check& c) {
  const std::vector<double> x{3.2, 1.0, 4.5, 2.25, 5.0, 3.0, 2.0, 4.0, 1.5, 3.75, 2.5};
  for (std::uint64_t seed : {0ull, 7ull, 12345ull}) {
    const auto got = bootstrap_ci(x, StatConfig{1000, 0.99, seed});
    const auto want = test::ref_bootstrap_ci(x, 1000, 0.99, seed);
    c.expect(within(got.first, want.first, kStatTolerance) && within(got.second, want.second, kStatTolerance),
             fmt::format("bootstrap_ci seed {}", seed));
  }
  std::mt19937 rng(4);
  std::uniform_int_distribution<int> cls(1, 5);
  std::bernoulli_distribution hit(0.7);
  std::vector<std::string> gold;
  std::vector<Judgment> preds;
  std::vector<std::string> pred_classes;
  for (int i = 0; i < 80; ++i) {
    const std::string g = std::to_string(cls(rng));
    gold.push_back(g);
    Judgment j;
    if (hit(rng)) {
      j = {Verdict::kMatched, g, {}, JudgeMethod::kModel};
    } else if (i % 3 != 0) {
      j = {Verdict::kMatched, std::to_string(cls(rng)), {}, JudgeMethod::kModel};
    }
    pred_classes.push_back(predicted_class(j));
    preds.push_back(j);
  }
  for (std::uint64_t seed : {0ull, 42ull}) {
    const auto got = bootstrap_f1(preds, gold, 1000, seed);
    const auto want = test::ref_bootstrap_f1(pred_classes, gold, 1000, seed);
    bool same = got.samples.size() == want.samples.size();
    for (std::size_t i = 0; same && i < got.samples.size(); ++i) same = within(got.samples[i], want.samples[i], kStatTolerance);
    c.expect(same && within(got.mean, want.mean, kStatTolerance) && within(got.q01, want.q01, kStatTolerance) &&
                 within(got.q99, want.q99, kStatTolerance),
             fmt::format("bootstrap_f1 seed {}", seed));
  }
  const std::vector<double> constant(40, 1.75);
  const auto point = bootstrap_ci(constant, StatConfig{});
  c.expect(point.first == 1.75 && point.second == 1.75, "constant data CI not a point");
  const StatConfig defaults;
  c.expect(defaults.bootstrap_iterations == 1000 && defaults.confidence_level == 0.99, "defaults");
  return "bootstrap_ci and bootstrap_f1 equal the reference streams exactly, constant CI is a point, defaults 1000/0.99";
}

std::string criterion_rates(Check& c) {
  constexpr int kInvalid = 117;
  constexpr int kInconclusive = 101;
  constexpr int kNotPresent = 102;
  constexpr int kMatched = 680;
  std::vector<ResponseRecord> records;
  auto add = [&](int n, const std::function<void(ResponseRecord&)>& fill) {
    for (int i = 0; i < n; ++i) {
      ResponseRecord r;
      r.task = {"m", {"Ms.", "Kim", "asian"}, "q" + std::to_string(records.size()), 1, 0, PromptVariant::kJson};
      fill(r);
      records.push_back(std::move(r));
    }
  };
  add(kInvalid, [](ResponseRecord& r) { r.validity = Validity::invalid("i'm sorry"); });
  add(kInconclusive, [](ResponseRecord& r) { r.judgment = Judgment{Verdict::kInconclusive, "", {}, JudgeMethod::kRule}; });
  add(kNotPresent, [](ResponseRecord& r) { r.judgment = Judgment{}; });
  add(kMatched, [](ResponseRecord& r) { r.judgment = Judgment{Verdict::kMatched, "2", {}, JudgeMethod::kRule}; });
  std::shuffle(records.begin(), records.end(), std::mt19937(8));
  c.expect(records.size() == 1000, "fixture size");
  const RateMetrics m = rate_metrics(records);
  c.expect(within(m.invalid_pct, 11.7, kRateTolerance), fmt::format("invalid {}", m.invalid_pct));
  c.expect(within(m.rejected_pct, 20.3, kRateTolerance), fmt::format("rejected {}", m.rejected_pct));
  c.expect(within(m.na_pct, 32.0, kRateTolerance), fmt::format("na {}", m.na_pct));
  return fmt::format("invalid {}% rejected {}% na {}% on 1000 records", m.invalid_pct, m.rejected_pct, m.na_pct);
}

std::string criterion_judge_data(Check& c) {
  const auto templates = load_lines((test::data_dir() / "judge" / "response_templates.txt").string());
  c.expect(templates.size() == 67, fmt::format("{} templates", templates.size()));
  const Questionnaire bfi = test::questionnaire("bfi");
  const auto opts = bfi.effective_options(bfi.questions.front());
  c.expect(opts.size() == 5, "bfi option count");
  const auto pairs = generate_seed_pairs(templates, opts);
  c.expect(pairs.size() == 1005, fmt::format("{} seed pairs", pairs.size()));
  std::size_t collisions = 0;
  for (std::uint64_t seed = 0; seed < kNegativeSeeds; ++seed) {
    const auto neg = sample_negatives(pairs, 3, seed);
    c.expect(neg.size() == 3 * pairs.size(), fmt::format("seed {}: {} negatives", seed, neg.size()));
    for (std::size_t i = 0; i < neg.size() && i / 3 < pairs.size(); ++i) {
      collisions += neg[i].option_display == pairs[i / 3].option_display ||
                    neg[i].response_text != pairs[i / 3].response_text;
    }
  }
  c.expect(collisions == 0, fmt::format("{} self-collisions", collisions));
  return fmt::format("{} seed pairs, 3x negatives with {} self-collisions over {} seeds", pairs.size(), collisions,
                     kNegativeSeeds);
}

// Appends `limit` records, then leaves a torn line and dies like a killed process.
class KillingSink final : public RecordSink {
 public:
  KillingSink(const std::filesystem::path& path, std::size_t limit, std::size_t torn)
      : path_(path), inner_(path), limit_(limit), torn_(torn) {}
  void append(const RawResponse& r) override {
    std::lock_guard lock(mu_);
    if (count_ == limit_) {
      const std::string line = encode_raw_response(r);
      std::ofstream(path_, std::ios::binary | std::ios::app) << line.substr(0, torn_ % line.size());
      throw SinkError("killed");
    }
    ++count_;
    inner_.append(r);
  }

 private:
  std::filesystem::path path_;
  JsonlSink inner_;
  std::size_t limit_;
  std::size_t torn_;
  std::size_t count_ = 0;
  std::mutex mu_;
};

std::string criterion_resume(Check& c) {
  ExperimentConfig cfg;
  cfg.name = "resume";
  cfg.seeds = {3, 4};
  ModelSpec m;
  m.id = "mock";
  m.mock = MockScript{{{std::string("q2"), std::nullopt, "{\"answer\": \"1\"}", std::nullopt}}, "{\"answer\": \"4\"}"};
  cfg.models.push_back(m);
  cfg.personas.source = std::vector<Persona>{{"Ms.", "Kim", "asian"}, {"Mr.", "Kim", "asian"}, {"Ms.", "Olson", "white"}};
  cfg.questionnaire = test::questionnaire("rfq");
  const auto plan = enumerate_run_plan(cfg);
  test::TempDir dir;
  std::mt19937_64 rng(20241015);
  std::uniform_int_distribution<std::size_t> prefix(0, plan.size() - 1);
  std::uniform_int_distribution<std::size_t> torn(1, 400);
  std::uniform_int_distribution<int> lanes(1, 4);
  int good = 0;
  for (int trial = 0; trial < kResumeTrials; ++trial) {
    const auto path = dir / fmt::format("raw{}.jsonl", trial);
    RunOptions first;
    first.parallelism = lanes(rng);
    bool killed = false;
    try {
      KillingSink sink(path, prefix(rng), torn(rng));
      execute_plan(plan, cfg, sink, first);
    } catch (const SinkError&) {
      killed = true;
    }
    RunOptions second;
    second.parallelism = lanes(rng);
    {
      JsonlSink sink(path);
      execute_plan(resume_plan(plan, path), cfg, sink, second);
    }
    const auto decoded = read_raw_responses(path);
    std::map<std::string, int> ok;
    for (const auto& r : decoded.records) ok[r.task.key()] += r.ok();
    bool exact = killed && decoded.warnings.empty() && decoded.records.size() == plan.size();
    for (const auto& t : plan) exact = exact && ok[t.key()] == 1;
    good += exact;
  }
  c.expect(good == kResumeTrials, fmt::format("{} of {} trials exact", good, kResumeTrials));
  return fmt::format("{}/{} kill-and-resume trials end with one successful record per task", good, kResumeTrials);
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<std::string(Check&)>>> criteria = {
      {"prompt fidelity", criterion_prompts},
      {"run-plan cardinalities", criterion_plan_counts},
      {"rule judge oracle equivalence", criterion_rule_judge},
      {"entropy machinery", criterion_entropy},
      {"threshold selection", criterion_threshold},
      {"BDI inversion invariant", criterion_bdi},
      {"bootstrap statistics", criterion_bootstrap},
      {"rate metrics", criterion_rates},
      {"judge-data generation", criterion_judge_data},
      {"crash-resume", criterion_resume},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    std::string detail;
    try {
      detail = criteria[i].second(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const bool pass = c.ok();
    failed += !pass;
    fmt::print("{} {:>2} {}: {}\n", pass ? "PASS" : "FAIL", i + 1, criteria[i].first, pass ? detail : c.failure());
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
