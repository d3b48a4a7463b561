#include "psyrig/runner.hpp"

#include <atomic>
#include <exception>
#include <map>
#include <thread>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "psyrig/export.hpp"

namespace psyrig {

JsonlSink::JsonlSink(const std::filesystem::path& path) : path_(path) {
  try {
    if (repair_jsonl_tail(path_)) spdlog::warn("{}: removed an interrupted trailing record", path_.string());
  } catch (const std::exception& e) {
    throw SinkError(std::string("cannot prepare sink: ") + e.what());
  }
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw SinkError("cannot open sink " + path_.string());
}

void JsonlSink::append(const RawResponse& response) {
  const std::string line = encode_raw_response(response) + "\n";
  std::lock_guard lock(mu_);
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.flush();
  if (!out_) throw SinkError("write to " + path_.string() + " failed");
}

void MemorySink::append(const RawResponse& response) {
  std::lock_guard lock(mu_);
  records_.push_back(response);
}

std::vector<RawResponse> MemorySink::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

RunSummary execute_plan(const std::vector<RunTask>& plan, const ExperimentConfig& cfg, RecordSink& sink,
                        const RunOptions& options) {
  Clock& clock = options.clock ? *options.clock : system_clock();
  const auto started = clock.now();

  std::map<std::string, std::unique_ptr<Generator>, std::less<>> generators;
  std::shared_ptr<HttpTransport> transport;
  for (const auto& spec : cfg.models) {
    if (options.generator_factory) {
      generators[spec.id] = options.generator_factory(spec);
    } else {
      if (spec.kind == ModelKind::kRemoteChat && !transport) transport = make_http_transport();
      generators[spec.id] = make_generator(spec, transport);
    }
  }

  // Render everything up front so a template problem fails before any request.
  std::vector<PromptPair> prompts;
  std::vector<Generator*> targets;
  prompts.reserve(plan.size());
  targets.reserve(plan.size());
  for (const auto& task : plan) {
    auto it = generators.find(task.model_id);
    if (it == generators.end()) throw std::invalid_argument("task references unknown model " + task.model_id);
    const QuestionItem* item = cfg.questionnaire.find_question(task.question_id);
    if (!item) throw std::invalid_argument("task references unknown question " + task.question_id);
    PromptSettings settings = cfg.prompt;
    settings.variant = task.prompt_variant;
    prompts.push_back(render_prompt(settings, task.persona, cfg.questionnaire, *item));
    targets.push_back(it->second.get());
  }

  const RepetitionMode mode = cfg.repetition_mode.value_or(RepetitionMode::kResample);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> succeeded{0};
  std::atomic<std::size_t> failed{0};
  std::atomic<bool> abort{false};
  std::mutex sink_mu;
  std::mutex error_mu;
  std::exception_ptr sink_error;

  auto worker = [&] {
    while (!abort.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= plan.size()) return;
      const RunTask& task = plan[i];
      RawResponse r;
      try {
        r = targets[i]->generate(prompts[i], task, effective_seed(task, mode));
      } catch (const std::exception& e) {
        r = RawResponse{};
        r.task = task;
        r.error = std::string("generator error: ") + e.what();
        r.error_kind = GenerationError::kHttp;
      }
      try {
        std::lock_guard lock(sink_mu);
        sink.append(r);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!sink_error) sink_error = std::current_exception();
        abort = true;
        return;
      }
      (r.ok() ? succeeded : failed).fetch_add(1);
    }
  };

  const int n_threads = std::max(1, std::min<int>(options.parallelism, static_cast<int>(std::max<std::size_t>(plan.size(), 1))));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (sink_error) std::rethrow_exception(sink_error);

  RunSummary summary;
  summary.succeeded = succeeded.load();
  summary.failed = failed.load();
  summary.attempted = summary.succeeded + summary.failed;
  summary.wall_clock_ms = (clock.now() - started).count();
  return summary;
}

std::vector<RunTask> resume_plan(const std::vector<RunTask>& plan, const std::vector<RawResponse>& existing) {
  std::unordered_set<std::string> done;
  for (const auto& r : existing) {
    if (r.ok()) done.insert(r.task.key());
  }
  std::vector<RunTask> out;
  for (const auto& t : plan) {
    if (!done.count(t.key())) out.push_back(t);
  }
  return out;
}

std::vector<RunTask> resume_plan(const std::vector<RunTask>& plan, const std::filesystem::path& sink_path) {
  std::error_code ec;
  if (!std::filesystem::exists(sink_path, ec)) return plan;
  auto decoded = read_raw_responses(sink_path);
  for (const auto& w : decoded.warnings) spdlog::warn("{}: {}", sink_path.string(), w);
  return resume_plan(plan, decoded.records);
}

}  // namespace psyrig
