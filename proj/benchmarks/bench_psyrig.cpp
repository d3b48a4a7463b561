#include <benchmark/benchmark.h>

#include <map>
#include <random>
#include <string>
#include <vector>

#include "psyrig/experiment.hpp"
#include "psyrig/postprocess.hpp"
#include "psyrig/prompt.hpp"
#include "psyrig/stats.hpp"

namespace {

const psyrig::Questionnaire& questionnaire(const std::string& name) {
  static std::map<std::string, psyrig::Questionnaire> cache;
  auto it = cache.find(name);
  if (it == cache.end()) {
    it = cache.emplace(name, psyrig::load_questionnaire(std::string(PSYRIG_DATA_DIR) + "/questionnaires/" + name + ".json")).first;
  }
  return it->second;
}

void BM_judge_rule_based(benchmark::State& state) {
  const auto& q = questionnaire("rfq");
  const auto options = q.effective_options(q.questions.front());
  const std::vector<std::string> texts{
      "{\"answer\": \"4. often\"}",
      "My answer is neither Option 1 nor 4. My answer is Item 5.",
      "I would say that I very often feel like I have made progress, so 5.",
      "Hard to tell. Sometimes, maybe never or seldom, but I guess 3 fits best overall."};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(psyrig::judge_rule_based(texts[i++ % texts.size()], options));
  }
}
BENCHMARK(BM_judge_rule_based);

void BM_render_prompt(benchmark::State& state) {
  const auto& q = questionnaire("bfi");
  const psyrig::Persona persona{"Mr.", "Garcia", "hispanic"};
  const psyrig::PromptSettings settings;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(psyrig::render_prompt(settings, persona, q, q.questions[i++ % q.questions.size()]));
  }
}
BENCHMARK(BM_render_prompt);

void BM_enumerate_run_plan(benchmark::State& state) {
  const auto cfg = psyrig::load_experiment_config(std::string(PSYRIG_DATA_DIR) + "/../configs/bfi.json");
  for (auto _ : state) benchmark::DoNotOptimize(psyrig::enumerate_run_plan(cfg));
  state.SetItemsProcessed(state.iterations() * 11000);
}
BENCHMARK(BM_enumerate_run_plan)->Unit(benchmark::kMillisecond);

void BM_bootstrap_ci(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  for (auto& v : x) v = u(rng);
  const psyrig::StatConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(psyrig::bootstrap_ci(x, cfg));
}
BENCHMARK(BM_bootstrap_ci)->Arg(50)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
