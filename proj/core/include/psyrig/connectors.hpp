#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "psyrig/experiment.hpp"
#include "psyrig/prompt.hpp"

namespace psyrig {

enum class GenerationError {
  kNone,
  kAuthentication,    // rejected credential or missing credential variable
  kRetriesExhausted,  // transient failures outlasted the retry budget
  kSchema,            // reply did not carry choices[0].message.content
  kHttp,              // non-retryable HTTP status
  kScripted,          // mock rule declared a failure
};

std::string_view to_string(GenerationError e);
std::optional<GenerationError> parse_generation_error(std::string_view s);

struct RawResponse {
  RunTask task;
  std::string text;
  std::int64_t latency_ms = 0;
  std::string endpoint_meta;
  std::string error;  // empty iff generation succeeded
  GenerationError error_kind = GenerationError::kNone;
  int retry_count = 0;
  std::int64_t generated_at_ms = 0;

  bool ok() const { return error.empty(); }
  bool operator==(const RawResponse&) const = default;
};

// Time source used for rate limiting, backoff and latency. Tests swap in a
// virtual clock so nothing actually sleeps.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::chrono::milliseconds now() = 0;
  virtual void sleep_for(std::chrono::milliseconds d) = 0;
  // Milliseconds since the Unix epoch, for record timestamps.
  virtual std::int64_t wall_ms() = 0;
};

class SystemClock final : public Clock {
 public:
  std::chrono::milliseconds now() override;
  void sleep_for(std::chrono::milliseconds d) override;
  std::int64_t wall_ms() override;
};

Clock& system_clock();

// Spaces request start times at least 1000/rps milliseconds apart. Slots are
// reserved under a lock and waited for outside it, so concurrent callers
// queue in arrival order.
class RateLimiter {
 public:
  RateLimiter(double requests_per_second, Clock& clock);

  void acquire();

 private:
  std::chrono::milliseconds interval_;
  Clock& clock_;
  std::mutex mu_;
  std::optional<std::chrono::milliseconds> next_free_;
};

struct HttpResult {
  int status = 0;  // 0 when the request never got an HTTP reply
  std::string body;
  std::string transport_error;
  bool timed_out = false;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResult post(const std::string& url,
                          const std::map<std::string, std::string>& headers,
                          const std::string& body, int timeout_ms) = 0;
};

// cpp-httplib backed transport (https when built with OpenSSL).
std::shared_ptr<HttpTransport> make_http_transport();

class Generator {
 public:
  virtual ~Generator() = default;
  virtual RawResponse generate(const PromptPair& prompt, const RunTask& task,
                               std::int64_t seed) = 0;
};

// First matching rule, else the default; zero latency; no clock involved.
RawResponse generate_mock(const MockScript& script, const PromptPair& prompt,
                          const RunTask& task);

class MockGenerator final : public Generator {
 public:
  explicit MockGenerator(MockScript script) : script_(std::move(script)) {}
  RawResponse generate(const PromptPair& prompt, const RunTask& task,
                       std::int64_t seed) override;

 private:
  MockScript script_;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

// Chat-completions request body for one prompt:
// {model, messages:[system, user], temperature, top_p, max_tokens[, top_k][, seed]}
std::string build_chat_request(const ModelSpec& spec, const PromptPair& prompt,
                               std::int64_t seed);

class RemoteChatGenerator final : public Generator {
 public:
  RemoteChatGenerator(ModelSpec spec, std::shared_ptr<HttpTransport> transport,
                      Clock& clock = system_clock(), EnvLookup env = process_env());

  RawResponse generate(const PromptPair& prompt, const RunTask& task,
                       std::int64_t seed) override;

 private:
  ModelSpec spec_;
  std::shared_ptr<HttpTransport> transport_;
  Clock& clock_;
  EnvLookup env_;
  std::unique_ptr<RateLimiter> limiter_;
};

RawResponse generate_remote(const ModelSpec& spec, const PromptPair& prompt,
                            const RunTask& task, std::int64_t seed,
                            HttpTransport& transport,
                            Clock& clock = system_clock(),
                            const EnvLookup& env = process_env(),
                            RateLimiter* limiter = nullptr);

// Model-based judge probabilities over HTTP. Request body
// {"response_text": ..., "option_display_texts": [...]}, reply
// {"probabilities": [...]} with one entry per option. Throws
// std::runtime_error on transport failure or a malformed reply.
class HttpProbabilityProvider final : public ProbabilityProvider {
 public:
  HttpProbabilityProvider(ProviderEndpoint endpoint,
                          std::shared_ptr<HttpTransport> transport,
                          EnvLookup env = process_env());

  std::vector<double> match_probabilities(
      std::string_view response_text,
      std::span<const std::string> option_display_texts) override;

 private:
  ProviderEndpoint endpoint_;
  std::shared_ptr<HttpTransport> transport_;
  EnvLookup env_;
};

// Mock specs get a MockGenerator; remote specs share `transport` (a default
// httplib transport when null).
std::unique_ptr<Generator> make_generator(
    const ModelSpec& spec, std::shared_ptr<HttpTransport> transport = nullptr);

}  // namespace psyrig
