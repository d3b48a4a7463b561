#include "psyrig/connectors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include <spdlog/spdlog.h>

#include "json.hpp"

namespace psyrig {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(GenerationError e) {
  switch (e) {
    case GenerationError::kNone: return "none";
    case GenerationError::kAuthentication: return "authentication";
    case GenerationError::kRetriesExhausted: return "retries-exhausted";
    case GenerationError::kSchema: return "schema";
    case GenerationError::kHttp: return "http";
    case GenerationError::kScripted: return "scripted";
  }
  return "none";
}

std::optional<GenerationError> parse_generation_error(std::string_view s) {
  for (auto e : {GenerationError::kNone, GenerationError::kAuthentication, GenerationError::kRetriesExhausted,
                 GenerationError::kSchema, GenerationError::kHttp, GenerationError::kScripted}) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

std::chrono::milliseconds SystemClock::now() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now().time_since_epoch());
}

void SystemClock::sleep_for(std::chrono::milliseconds d) {
  if (d.count() > 0) std::this_thread::sleep_for(d);
}

std::int64_t SystemClock::wall_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Clock& system_clock() {
  static SystemClock clock;
  return clock;
}

RateLimiter::RateLimiter(double requests_per_second, Clock& clock)
    : interval_(requests_per_second > 0.0
                    ? std::chrono::milliseconds(static_cast<std::int64_t>(std::ceil(1000.0 / requests_per_second)))
                    : std::chrono::milliseconds(0)),
      clock_(clock) {}

void RateLimiter::acquire() {
  if (interval_.count() == 0) return;
  std::chrono::milliseconds wait{0};
  {
    std::lock_guard lock(mu_);
    const auto now = clock_.now();
    const auto slot = next_free_ ? std::max(now, *next_free_) : now;
    next_free_ = slot + interval_;
    wait = slot - now;
  }
  clock_.sleep_for(wait);
}

namespace {

bool rule_matches(const MockRule& rule, const PromptPair& prompt, const RunTask& task) {
  if (rule.question_id && *rule.question_id != task.question_id) return false;
  if (rule.prompt_contains && prompt.system.find(*rule.prompt_contains) == std::string::npos &&
      prompt.user.find(*rule.prompt_contains) == std::string::npos) {
    return false;
  }
  return true;
}

}  // namespace

RawResponse generate_mock(const MockScript& script, const PromptPair& prompt, const RunTask& task) {
  RawResponse r;
  r.task = task;
  r.endpoint_meta = "mock";
  for (const auto& rule : script.rules) {
    if (!rule_matches(rule, prompt, task)) continue;
    if (rule.error) {
      r.error = *rule.error;
      r.error_kind = GenerationError::kScripted;
    } else {
      r.text = rule.response;
    }
    return r;
  }
  r.text = script.default_response;
  return r;
}

RawResponse MockGenerator::generate(const PromptPair& prompt, const RunTask& task, std::int64_t) {
  return generate_mock(script_, prompt, task);
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
}

std::string build_chat_request(const ModelSpec& spec, const PromptPair& prompt, std::int64_t seed) {
  ordered_json body;
  body["model"] = spec.model_name.empty() ? spec.id : spec.model_name;
  body["messages"] = ordered_json::array({
      ordered_json{{"role", "system"}, {"content", prompt.system}},
      ordered_json{{"role", "user"}, {"content", prompt.user}},
  });
  body["temperature"] = spec.params.temperature;
  body["top_p"] = spec.params.top_p;
  body["max_tokens"] = spec.params.max_new_tokens;
  if (spec.forward_top_k) body["top_k"] = spec.params.top_k;
  if (spec.forward_seed) body["seed"] = seed;
  return body.dump();
}

namespace {

bool is_transient(const HttpResult& res) {
  return res.status == 0 || res.status == 429 || res.status >= 500;
}

std::string describe(const HttpResult& res) {
  if (res.timed_out) return "request timed out";
  if (res.status == 0) return "transport error: " + res.transport_error;
  std::string snippet = res.body.substr(0, 200);
  return "HTTP " + std::to_string(res.status) + (snippet.empty() ? "" : ": " + snippet);
}

std::map<std::string, std::string> auth_headers(const std::string& auth_env, const EnvLookup& env,
                                                std::string* missing) {
  std::map<std::string, std::string> headers{{"Content-Type", "application/json"}};
  if (auth_env.empty()) return headers;
  auto key = env(auth_env);
  if (!key) {
    *missing = "credential variable " + auth_env + " is not set";
    return headers;
  }
  headers["Authorization"] = "Bearer " + *key;
  return headers;
}

}  // namespace

RawResponse generate_remote(const ModelSpec& spec, const PromptPair& prompt, const RunTask& task,
                            std::int64_t seed, HttpTransport& transport, Clock& clock, const EnvLookup& env,
                            RateLimiter* limiter) {
  RawResponse r;
  r.task = task;
  const auto started = clock.now();
  auto finish = [&](RawResponse& out) -> RawResponse {
    out.latency_ms = std::max<std::int64_t>(0, (clock.now() - started).count());
    out.generated_at_ms = clock.wall_ms();
    return out;
  };

  std::string missing;
  const auto headers = auth_headers(spec.auth_env, env, &missing);
  if (!missing.empty()) {
    r.error = missing;
    r.error_kind = GenerationError::kAuthentication;
    return finish(r);
  }

  const std::string body = build_chat_request(spec, prompt, seed);
  double backoff = spec.retry.initial_backoff_ms;
  for (int attempt = 0;; ++attempt) {
    if (limiter) limiter->acquire();
    const HttpResult res = transport.post(spec.endpoint, headers, body, spec.timeout_ms);

    if (res.status >= 200 && res.status < 300) {
      auto j = json::parse(res.body, nullptr, false);
      const json* content = nullptr;
      if (j.is_object() && j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
        const auto& choice = j["choices"][0];
        if (choice.is_object() && choice.contains("message") && choice["message"].is_object() &&
            choice["message"].contains("content") && choice["message"]["content"].is_string()) {
          content = &choice["message"]["content"];
        }
      }
      if (!content) {
        r.error = "reply lacks choices[0].message.content";
        r.error_kind = GenerationError::kSchema;
        return finish(r);
      }
      r.text = content->get<std::string>();
      ordered_json meta;
      if (j.contains("id") && j["id"].is_string()) meta["id"] = j["id"];
      if (j.contains("model") && j["model"].is_string()) meta["model"] = j["model"];
      const auto& choice = j["choices"][0];
      if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
        meta["finish_reason"] = choice["finish_reason"];
      }
      r.endpoint_meta = meta.empty() ? "" : meta.dump();
      return finish(r);
    }
    if (res.status == 401 || res.status == 403) {
      r.error = describe(res);
      r.error_kind = GenerationError::kAuthentication;
      return finish(r);
    }
    if (!is_transient(res)) {
      r.error = describe(res);
      r.error_kind = GenerationError::kHttp;
      return finish(r);
    }
    if (attempt >= spec.retry.max_retries) {
      r.error = "retries exhausted: " + describe(res);
      r.error_kind = GenerationError::kRetriesExhausted;
      return finish(r);
    }
    spdlog::debug("{}: transient failure ({}), retrying", spec.id, describe(res));
    clock.sleep_for(std::chrono::milliseconds(static_cast<std::int64_t>(backoff)));
    backoff = std::min(backoff * spec.retry.multiplier, static_cast<double>(spec.retry.max_backoff_ms));
    ++r.retry_count;
  }
}

RemoteChatGenerator::RemoteChatGenerator(ModelSpec spec, std::shared_ptr<HttpTransport> transport, Clock& clock,
                                         EnvLookup env)
    : spec_(std::move(spec)), transport_(std::move(transport)), clock_(clock), env_(std::move(env)) {
  if (!transport_) throw std::invalid_argument("RemoteChatGenerator needs a transport");
  if (spec_.max_requests_per_second > 0.0) {
    limiter_ = std::make_unique<RateLimiter>(spec_.max_requests_per_second, clock_);
  }
  if (!spec_.forward_top_k) {
    spdlog::info("{}: top_k={} not forwarded (not in forward_params)", spec_.id, spec_.params.top_k);
  }
}

RawResponse RemoteChatGenerator::generate(const PromptPair& prompt, const RunTask& task, std::int64_t seed) {
  return generate_remote(spec_, prompt, task, seed, *transport_, clock_, env_, limiter_.get());
}

HttpProbabilityProvider::HttpProbabilityProvider(ProviderEndpoint endpoint, std::shared_ptr<HttpTransport> transport,
                                                 EnvLookup env)
    : endpoint_(std::move(endpoint)), transport_(std::move(transport)), env_(std::move(env)) {
  if (!transport_) transport_ = make_http_transport();
}

std::vector<double> HttpProbabilityProvider::match_probabilities(std::string_view response_text,
                                                                 std::span<const std::string> option_display_texts) {
  std::string missing;
  const auto headers = auth_headers(endpoint_.auth_env, env_, &missing);
  if (!missing.empty()) throw std::runtime_error("probability provider: " + missing);
  ordered_json body;
  body["response_text"] = response_text;
  body["option_display_texts"] = std::vector<std::string>(option_display_texts.begin(), option_display_texts.end());
  const HttpResult res = transport_->post(endpoint_.endpoint, headers, body.dump(), endpoint_.timeout_ms);
  if (res.status < 200 || res.status >= 300) throw std::runtime_error("probability provider: " + describe(res));
  auto j = json::parse(res.body, nullptr, false);
  if (!j.is_object() || !j.contains("probabilities") || !j["probabilities"].is_array()) {
    throw std::runtime_error("probability provider: reply lacks a probabilities array");
  }
  std::vector<double> out;
  for (const auto& p : j["probabilities"]) {
    if (!p.is_number()) throw std::runtime_error("probability provider: non-numeric probability");
    out.push_back(p.get<double>());
  }
  if (out.size() != option_display_texts.size()) {
    throw std::runtime_error("probability provider: expected " + std::to_string(option_display_texts.size()) +
                             " probabilities, got " + std::to_string(out.size()));
  }
  return out;
}

std::unique_ptr<Generator> make_generator(const ModelSpec& spec, std::shared_ptr<HttpTransport> transport) {
  if (spec.kind == ModelKind::kMock) {
    if (!spec.mock) throw std::invalid_argument("mock model " + spec.id + " has no mock script");
    return std::make_unique<MockGenerator>(*spec.mock);
  }
  return std::make_unique<RemoteChatGenerator>(spec, transport ? std::move(transport) : make_http_transport());
}

}  // namespace psyrig
