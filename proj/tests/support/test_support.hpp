#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "psyrig/connectors.hpp"
#include "psyrig/experiment.hpp"

namespace psyrig::test {

inline std::filesystem::path source_dir() { return PSYRIG_SOURCE_DIR; }
inline std::filesystem::path data_dir() { return source_dir() / "data"; }
inline std::filesystem::path config_dir() { return source_dir() / "configs"; }
inline std::filesystem::path fixture_dir() { return PSYRIG_FIXTURE_DIR; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

inline Questionnaire questionnaire(const std::string& name) {
  return load_questionnaire(data_dir() / "questionnaires" / (name + ".json"));
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("psyrig_test_" + std::to_string(::getpid()) + "_" + std::to_string(stamp) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Deterministic clock: sleeping only advances the virtual time.
class VirtualClock final : public Clock {
 public:
  std::chrono::milliseconds now() override { return now_; }
  void sleep_for(std::chrono::milliseconds d) override {
    sleeps.push_back(d);
    now_ += d;
  }
  std::int64_t wall_ms() override { return 1700000000000 + now_.count(); }

  void advance(std::chrono::milliseconds d) { now_ += d; }

  std::vector<std::chrono::milliseconds> sleeps;

 private:
  std::chrono::milliseconds now_{0};
};

inline std::vector<AnswerOption> rfq_options() {
  return {{"1", "never or seldom", 1}, {"2", "", 2}, {"3", "sometimes", 3}, {"4", "", 4}, {"5", "very often", 5}};
}

}  // namespace psyrig::test
