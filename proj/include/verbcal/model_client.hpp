#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace verbcal {

enum class Role { kSystem, kUser, kAssistant };

std::string_view to_string(Role role);
Role role_from_string(std::string_view name);

struct Message {
  Role role = Role::kUser;
  std::string content;
};

struct ChatRequest {
  std::vector<Message> messages;
  double temperature = 1.0;
  double top_p = 1.0;
  int max_tokens = 512;
  std::string model_id;

  // Throws InvalidInput: empty messages, first non-system role not user,
  // temperature < 0, top_p outside (0,1], max_tokens < 1.
  void validate() const;
};

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string content;
  std::string finish_reason = "stop";
  Usage usage;
  std::int64_t latency_ms = 0;
  int retries = 0;
};

struct SampleOutcome {
  std::optional<ChatResponse> response;
  std::string error;
};

// Stable key over the full message list; 2-stage dialogues hash differently
// from their first stage.
std::string message_hash(const std::vector<Message>& messages);

class ChatModel {
 public:
  virtual ~ChatModel() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  // n independent completions; each index fails independently.
  virtual std::vector<SampleOutcome> sample_n(const ChatRequest& request, std::size_t n);
  virtual std::string model_id() const = 0;
};

// ---------------------------------------------------------------------------
// Time

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::chrono::milliseconds now() = 0;
  virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

class SystemClock final : public Clock {
 public:
  std::chrono::milliseconds now() override;
  void sleep_for(std::chrono::milliseconds d) override;
};

// Sleeping advances time instantly. Used in tests.
class VirtualClock final : public Clock {
 public:
  std::chrono::milliseconds now() override;
  void sleep_for(std::chrono::milliseconds d) override;
  std::chrono::milliseconds total_slept() const;

 private:
  mutable std::mutex mu_;
  std::chrono::milliseconds now_{0};
  std::chrono::milliseconds slept_{0};
};

// Never admits more than `requests_per_minute` acquisitions in any 60 s
// sliding window. Zero means unlimited.
class RateLimiter {
 public:
  RateLimiter(std::size_t requests_per_minute, std::shared_ptr<Clock> clock);
  void acquire();
  std::size_t limit() const { return rpm_; }

 private:
  std::size_t rpm_;
  std::shared_ptr<Clock> clock_;
  std::mutex mu_;
  std::deque<std::chrono::milliseconds> admitted_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{30000};

  // base_delay * 2^retry_index plus up to base_delay of jitter, never above max_delay.
  std::chrono::milliseconds delay(int retry_index, std::mt19937_64& rng) const;
};

// ---------------------------------------------------------------------------
// Providers

enum class ProviderKind { kOpenAI, kAnthropic, kMock };

struct ProviderProfile {
  std::string name;
  ProviderKind kind = ProviderKind::kMock;
  std::string model_id;
  std::string base_url;
  std::string api_key_env;
  double temperature = 1.0;
  double top_p = 1.0;
  int max_tokens = 512;
  int max_tokens_cot = 1024;
  std::size_t requests_per_minute = 0;
  std::size_t max_concurrency = 4;
  std::chrono::milliseconds timeout{60000};
  RetryPolicy retry;
  std::string fixtures;       // mock only
  std::uint64_t jitter_seed = 0;

  // Sampling defaults per model family: "gpt" (top-p 1.0), "claude"
  // (top-p 0.7), "open_chat" (temperature 1.0, top-p 1.0).
  static ProviderProfile for_family(std::string_view family);
};

ProviderKind provider_kind_from_string(std::string_view name);
std::string_view to_string(ProviderKind kind);

struct HttpResult {
  int status = 0;  // 0: no response (connection failure or timeout)
  std::string body;
  bool timed_out = false;
  std::string error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResult post(const std::string& base_url, const std::string& path,
                          const std::multimap<std::string, std::string>& headers,
                          const std::string& body, std::chrono::milliseconds timeout) = 0;
};

std::shared_ptr<HttpTransport> make_httplib_transport();

using RequestObserver =
    std::function<void(const ChatRequest&, const ChatResponse* response, const std::string& error)>;

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> process_env(const std::string& name);

// OpenAI-compatible chat completions or Anthropic messages over HTTP, with
// retry on 429/5xx/transport failures.
class HttpChatModel final : public ChatModel {
 public:
  HttpChatModel(ProviderProfile profile, std::shared_ptr<HttpTransport> transport,
                std::shared_ptr<Clock> clock, std::shared_ptr<RateLimiter> limiter,
                EnvLookup env = process_env, RequestObserver observer = {});

  ChatResponse complete(const ChatRequest& request) override;
  std::string model_id() const override { return profile_.model_id; }

  std::string request_body(const ChatRequest& request) const;
  ChatResponse parse_response(const std::string& body) const;

 private:
  ProviderProfile profile_;
  std::shared_ptr<HttpTransport> transport_;
  std::shared_ptr<Clock> clock_;
  std::shared_ptr<RateLimiter> limiter_;
  EnvLookup env_;
  RequestObserver observer_;
  std::counting_semaphore<1024> slots_;
  std::mutex rng_mu_;
  std::mt19937_64 jitter_rng_;
};

// Scripted replies keyed on message_hash. Repeated requests with the same key
// cycle through that key's replies in order.
class MockChatModel final : public ChatModel {
 public:
  using Responder = std::function<std::optional<std::string>(const ChatRequest&, std::size_t call_index)>;

  explicit MockChatModel(std::string model_id);

  // Line-delimited JSON: {"hash": ..., "reply": ...} or {"messages": [...], "reply": ...}.
  void load_fixtures(const std::string& path);
  void add_fixture(const std::string& hash, std::string reply);
  void add_fixture(const std::vector<Message>& messages, std::string reply);
  // Consulted when no fixture matches.
  void set_responder(Responder responder);
  void set_observer(RequestObserver observer);

  ChatResponse complete(const ChatRequest& request) override;
  std::string model_id() const override { return model_id_; }

  std::size_t call_count() const;
  std::vector<ChatRequest> requests() const;

 private:
  std::string model_id_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::vector<std::string>> fixtures_;
  std::unordered_map<std::string, std::size_t> cursor_;
  Responder responder_;
  RequestObserver observer_;
  std::vector<ChatRequest> requests_;
};

struct ClientContext {
  std::shared_ptr<Clock> clock;
  std::shared_ptr<HttpTransport> transport;
  EnvLookup env = process_env;
  RequestObserver observer;
};

std::shared_ptr<ChatModel> make_chat_model(const ProviderProfile& profile, const ClientContext& context);

}  // namespace verbcal
