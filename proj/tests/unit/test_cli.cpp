#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "psyrig/analysis.hpp"
#include "psyrig/export.hpp"
#include "psyrig/judge_data.hpp"
#include "test_support.hpp"

using namespace psyrig;
namespace fs = std::filesystem;

namespace {

int psy(std::initializer_list<std::string> args) {
  std::vector<std::string> owned{"psyrig", "-q"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : owned) argv.push_back(a.c_str());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

// Redirects fd 1 into a file for the lifetime of the object.
class StdoutCapture {
 public:
  explicit StdoutCapture(fs::path path) : path_(std::move(path)) {
    std::fflush(stdout);
    saved_ = dup(1);
    std::FILE* f = std::fopen(path_.c_str(), "w");
    dup2(fileno(f), 1);
    std::fclose(f);
  }
  ~StdoutCapture() { restore(); }
  std::string text() {
    restore();
    return test::slurp(path_);
  }

 private:
  void restore() {
    if (saved_ < 0) return;
    std::fflush(stdout);
    dup2(saved_, 1);
    close(saved_);
    saved_ = -1;
  }
  fs::path path_;
  int saved_ = -1;
};

fs::path e2e(const std::string& name) { return test::fixture_dir() / "e2e" / name; }

std::size_t line_count(const fs::path& p) {
  const std::string s = test::slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("end-to-end pipeline reproduces the goldens") {
  test::TempDir dir;
  const std::string cfg = e2e("experiment.json").string();
  const auto raw = dir / "raw.jsonl";
  const auto processed = dir / "processed.jsonl";
  const auto rates = dir / "rates.csv";
  const auto scores = dir / "scores.csv";
  const auto report = dir / "report.csv";

  REQUIRE(psy({"validate", cfg}) == 0);
  REQUIRE(psy({"run", "--config", cfg, "--out", raw.string(), "--parallelism", "3"}) == 0);
  REQUIRE(psy({"postprocess", "--in", raw.string(), "--config", cfg, "--out", processed.string(), "--rates-out",
               rates.string()}) == 0);
  REQUIRE(psy({"score", "--in", processed.string(), "--config", cfg, "--out", scores.string()}) == 0);
  REQUIRE(psy({"report", "--in", scores.string(), "--config", cfg, "--group-by", "model,gender", "--out",
               report.string()}) == 0);

  // parallel runs append in completion order, so compare raw output as a set of lines
  auto sorted_lines = [](const fs::path& p) {
    std::vector<std::string> v;
    std::istringstream in(test::slurp(p));
    for (std::string l; std::getline(in, l);) v.push_back(l);
    std::sort(v.begin(), v.end());
    return v;
  };
  CHECK(sorted_lines(raw) == sorted_lines(e2e("golden_raw.jsonl")));
  CHECK(test::slurp(processed) == test::slurp(e2e("golden_processed.jsonl")));
  CHECK(test::slurp(rates) == test::slurp(e2e("golden_rates.csv")));
  CHECK(test::slurp(scores) == test::slurp(e2e("golden_scores.csv")));
  CHECK(test::slurp(report) == test::slurp(e2e("golden_report.csv")));
}

TEST_CASE("golden scores agree with hand-computed means") {
  // steady answers 4 to Ms. and 2 to Mr. and refuses q2; wobbly answers 3,
  // fails q4 and ties on q5. Promotion reverses q1, q9, q11; prevention
  // reverses everything but q5.
  const auto scores = parse_score_table(read_csv(e2e("golden_scores.csv")));
  REQUIRE(scores.size() == 2 * 8 * 2);
  for (const auto& s : scores) {
    const bool female = s.persona.title == "Ms.";
    double want = 3.0;
    int missing = 0;
    if (s.model_id == "steady" && s.scale_name == "prevention") {
      want = female ? (2 + 2 + 4 + 2) / 4.0 : (4 + 4 + 2 + 4) / 4.0;
      missing = 1;
    }
    if (s.model_id == "wobbly" && s.scale_name == "prevention") missing = 2;
    CHECK(s.value == want);
    CHECK(s.n_missing == missing);
  }
  const CsvTable rep = read_csv(e2e("golden_report.csv"));
  REQUIRE(rep.rows.size() == 8);
  CHECK(rep.rows[0] == std::vector<std::string>{"steady", "female", "prevention", "2.5", "2.5", "2.5", "4", "4"});
  CHECK(rep.rows[2] == std::vector<std::string>{"steady", "male", "prevention", "3.5", "3.5", "3.5", "4", "4"});
  const CsvTable rates = read_csv(e2e("golden_rates.csv"));
  CHECK(rates.rows[0] == std::vector<std::string>{"steady", "all", "88", "9.090909090909092", "0", "9.090909090909092"});
}

TEST_CASE("run refuses to clobber output and resumes failed tasks") {
  test::TempDir dir;
  const std::string cfg = e2e("experiment.json").string();
  const auto raw = dir / "raw.jsonl";
  REQUIRE(psy({"run", "--config", cfg, "--out", raw.string()}) == 0);
  const std::string before = test::slurp(raw);
  CHECK(line_count(raw) == 176);
  CHECK(psy({"run", "--config", cfg, "--out", raw.string()}) == 2);
  CHECK(test::slurp(raw) == before);
  CHECK(psy({"run", "--config", cfg, "--out", raw.string(), "--resume"}) == 0);
  CHECK(line_count(raw) == 176 + 8);
  CHECK(test::slurp(raw).substr(0, before.size()) == before);
}

TEST_CASE("run overrides seed and variant") {
  test::TempDir dir;
  const std::string cfg = e2e("experiment.json").string();
  const auto raw = dir / "raw.jsonl";
  REQUIRE(psy({"run", "--config", cfg, "--out", raw.string(), "--seed", "99", "--variant", "natural"}) == 0);
  const auto recs = read_raw_responses(raw).records;
  REQUIRE(recs.size() == 176);
  for (const auto& r : recs) {
    CHECK(r.task.seed == 99);
    CHECK(r.task.prompt_variant == PromptVariant::kNatural);
  }
}

TEST_CASE("validate reports violations with exit status 1") {
  test::TempDir dir;
  auto j = nlohmann::json::parse(test::slurp(e2e("experiment.json")));
  j["questionnaire"] = (test::data_dir() / "questionnaires" / "rfq.json").string();
  j["judge"]["refusal_phrases_file"] = (test::data_dir() / "judge" / "refusal_phrases.txt").string();
  j["repetitions"] = 0;
  j["models"][1]["id"] = "steady";
  test::spit(dir / "bad.json", j.dump());
  CHECK(psy({"validate", (dir / "bad.json").string()}) == 1);
  test::spit(dir / "broken.json", "{\"name\": ");
  CHECK(psy({"validate", (dir / "broken.json").string()}) == 1);
  j["surprise"] = true;
  test::spit(dir / "unknown.json", j.dump());
  CHECK(psy({"validate", (dir / "unknown.json").string()}) == 1);
  CHECK(psy({"validate", (dir / "missing.json").string()}) == 2);
  CHECK(psy({"frobnicate"}) == 2);
  CHECK(psy({}) == 2);
}

TEST_CASE("shipped configs validate") {
  for (const auto& e : fs::directory_iterator(test::config_dir())) CHECK(psy({"validate", e.path().string()}) == 0);
}

TEST_CASE("report options") {
  test::TempDir dir;
  const auto out = dir / "r.csv";
  const std::string scores = e2e("golden_scores.csv").string();
  CHECK(psy({"report", "--in", scores, "--out", out.string(), "--group-by", "height"}) == 2);
  REQUIRE(psy({"report", "--in", scores, "--out", out.string(), "--group-by", "group,model", "--iterations", "50",
               "--seed", "1", "--level", "0.95"}) == 0);
  const CsvTable t = read_csv(out);
  CHECK(t.header.front() == "group");
  CHECK(t.rows.size() == 4 * 2 * 2);
  test::spit(dir / "empty.csv", "model_id,title,surname,group,gender_tag,seed,repetition,scale,value,n_items,n_missing\n");
  CHECK(psy({"report", "--in", (dir / "empty.csv").string(), "--out", out.string()}) == 2);
}

TEST_CASE("postprocess action rates and model judge without provider") {
  test::TempDir dir;
  const std::string cfg = e2e("experiment.json").string();
  const auto rates = dir / "rates.csv";
  REQUIRE(psy({"postprocess", "--in", e2e("golden_raw.jsonl").string(), "--config", cfg, "--out",
               (dir / "p.jsonl").string(), "--rates-out", rates.string(), "--action-label", "3,q1=1"}) == 0);
  const CsvTable t = read_csv(rates);
  CHECK(t.header.back() == "action_pct");
  for (const auto& row : t.rows) {
    if (row[0] == "wobbly" && row[1] == "q1") CHECK(row.back() == "0");
    if (row[0] == "wobbly" && row[1] == "q3") CHECK(row.back() == "100");
    if (row[0] == "wobbly" && row[1] == "q5") CHECK(row.back() == "");
  }
  CHECK(psy({"postprocess", "--in", e2e("golden_raw.jsonl").string(), "--config", cfg, "--out",
             (dir / "p2.jsonl").string(), "--judge", "model"}) == 2);
}

TEST_CASE("judge-data subcommands chain") {
  test::TempDir dir;
  const auto pairs = dir / "pairs.jsonl";
  const auto negs = dir / "negs.jsonl";
  const auto prompts = dir / "prompts.jsonl";
  REQUIRE(psy({"judge-data", "seed-pairs", "--templates", (test::data_dir() / "judge" / "response_templates.txt").string(),
               "--questionnaire", (test::data_dir() / "questionnaires" / "bfi.json").string(), "--out",
               pairs.string()}) == 0);
  CHECK(line_count(pairs) == 1005);
  REQUIRE(psy({"judge-data", "negatives", "--in", pairs.string(), "--out", negs.string(), "--seed", "4"}) == 0);
  CHECK(line_count(negs) == 3 * 1005);
  for (const auto& line : read_jsonl_lines(negs).lines) {
    CHECK(decode_judge_pair(line).label == PairLabel::kNotCorresponds);
  }
  REQUIRE(psy({"judge-data", "paraphrase-prompts", "--in", pairs.string(), "--strategies",
               (test::data_dir() / "judge" / "paraphrase_strategies.txt").string(), "--out", prompts.string()}) == 0);
  const auto first = nlohmann::json::parse(read_jsonl_lines(prompts).lines.at(0));
  CHECK(first["user"].get<std::string>().find("Statement to be paraphrased:") != std::string::npos);
  CHECK(psy({"judge-data", "seed-pairs", "--templates", (test::data_dir() / "judge" / "response_templates.txt").string(),
             "--questionnaire", (test::data_dir() / "questionnaires" / "bfi.json").string(), "--question", "q99",
             "--out", pairs.string()}) == 2);
  CHECK(psy({"judge-data"}) == 2);
}

TEST_CASE("judge-data filter, threshold and f1") {
  test::TempDir dir;
  std::string lines;
  for (int i = 0; i < 8; ++i) {
    lines += "{\"response_text\":\"r" + std::to_string(i) +
             "\",\"option_display\":\"1. yes\",\"label\":\"corresponds\",\"similarity\":" + std::to_string(i) + "}\n";
  }
  test::spit(dir / "sim.jsonl", lines);
  REQUIRE(psy({"judge-data", "filter", "--in", (dir / "sim.jsonl").string(), "--out", (dir / "kept.jsonl").string(),
               "--percentile", "50"}) == 0);
  CHECK(line_count(dir / "kept.jsonl") == 4);
  test::spit(dir / "nosim.jsonl", "{\"response_text\":\"r\",\"option_display\":\"1\",\"label\":\"corresponds\"}\n");
  CHECK(psy({"judge-data", "filter", "--in", (dir / "nosim.jsonl").string(), "--out", (dir / "k.jsonl").string()}) == 2);

  test::spit(dir / "ent.jsonl",
             "{\"entropy\":0.1,\"gold\":\"match\"}\n{\"entropy\":0.3,\"gold\":\"match\"}\n"
             "{\"entropy\":0.5,\"gold\":\"noise\"}\n{\"entropy\":0.9,\"gold\":\"noise\"}\n");
  {
    StdoutCapture cap(dir / "out.txt");
    REQUIRE(psy({"judge-data", "threshold", "--in", (dir / "ent.jsonl").string()}) == 0);
    CHECK(cap.text() == "0.4\n");
  }
  test::spit(dir / "badgold.jsonl", "{\"entropy\":0.1,\"gold\":\"maybe\"}\n");
  CHECK(psy({"judge-data", "threshold", "--in", (dir / "badgold.jsonl").string()}) == 2);

  test::spit(dir / "f1.jsonl",
             "{\"gold\":\"1\",\"verdict\":\"matched\",\"label\":\"1\"}\n"
             "{\"gold\":\"2\",\"verdict\":\"matched\",\"label\":\"2\"}\n"
             "{\"gold\":\"2\",\"verdict\":\"inconclusive\"}\n"
             "{\"gold\":\"noise\",\"verdict\":\"not-present\"}\n");
  REQUIRE(psy({"judge-data", "f1", "--in", (dir / "f1.jsonl").string(), "--out", (dir / "f1.json").string(),
               "--iterations", "30", "--seed", "2"}) == 0);
  const auto j = nlohmann::json::parse(test::slurp(dir / "f1.json"));
  CHECK(j["samples"].size() == 30);
  CHECK(j["average"] == "macro");
  CHECK(j["q01"].get<double>() <= j["mean"].get<double>());
  CHECK(j["mean"].get<double>() <= j["q99"].get<double>());
  test::spit(dir / "f1bad.jsonl", "{\"gold\":\"1\",\"verdict\":\"perhaps\"}\n");
  CHECK(psy({"judge-data", "f1", "--in", (dir / "f1bad.jsonl").string()}) == 2);
}
