#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "psyrig/connectors.hpp"
#include "psyrig/experiment.hpp"

namespace psyrig {

struct RunSummary {
  std::size_t attempted = 0;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::int64_t wall_clock_ms = 0;
};

class SinkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Destination for generation events. Implementations must tolerate calls
// from several threads; the runner serializes appends anyway.
class RecordSink {
 public:
  virtual ~RecordSink() = default;
  // Throws SinkError when the record could not be persisted.
  virtual void append(const RawResponse& response) = 0;
};

// Append-only JSONL file, flushed after every line. Opening repairs an
// interrupted trailing line left by a previous crash.
class JsonlSink final : public RecordSink {
 public:
  explicit JsonlSink(const std::filesystem::path& path);
  void append(const RawResponse& response) override;

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mu_;
};

class MemorySink final : public RecordSink {
 public:
  void append(const RawResponse& response) override;
  std::vector<RawResponse> records() const;

 private:
  mutable std::mutex mu_;
  std::vector<RawResponse> records_;
};

using GeneratorFactory =
    std::function<std::unique_ptr<Generator>(const ModelSpec&)>;

struct RunOptions {
  int parallelism = 1;
  // Defaults to make_generator with one shared HTTP transport.
  GeneratorFactory generator_factory;
  Clock* clock = nullptr;  // system clock when null
};

// Attempts every task exactly once with at most `parallelism` generations
// in flight. Generation failures are recorded and counted; a SinkError
// stops the run (records already appended stay on disk) and propagates.
RunSummary execute_plan(const std::vector<RunTask>& plan,
                        const ExperimentConfig& cfg, RecordSink& sink,
                        const RunOptions& options = {});

// The plan minus tasks that already have a successful record, order kept.
std::vector<RunTask> resume_plan(const std::vector<RunTask>& plan,
                                 const std::vector<RawResponse>& existing);

// Same, reading the sink file. A missing file means nothing ran yet; a
// corrupt line throws DataError with its line number.
std::vector<RunTask> resume_plan(const std::vector<RunTask>& plan,
                                 const std::filesystem::path& sink_path);

}  // namespace psyrig
