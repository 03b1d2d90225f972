#include "verbcal/model_client.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "verbcal/error.hpp"
#include "verbcal/hashing.hpp"

namespace verbcal {

using json = nlohmann::ordered_json;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

Role role_from_string(std::string_view name) {
  if (name == "system") return Role::kSystem;
  if (name == "user") return Role::kUser;
  if (name == "assistant") return Role::kAssistant;
  throw InvalidInput("unknown role '" + std::string(name) + "'");
}

void ChatRequest::validate() const {
  if (messages.empty()) throw InvalidInput("chat request has no messages");
  const auto first = std::find_if(messages.begin(), messages.end(),
                                  [](const Message& m) { return m.role != Role::kSystem; });
  if (first == messages.end() || first->role != Role::kUser)
    throw InvalidInput("first non-system message must come from the user");
  if (!(temperature >= 0.0)) throw InvalidInput("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw InvalidInput("top_p must be in (0,1]");
  if (max_tokens < 1) throw InvalidInput("max_tokens must be positive");
}

std::string message_hash(const std::vector<Message>& messages) {
  json arr = json::array();
  for (const auto& m : messages) arr.push_back(json::array({to_string(m.role), m.content}));
  return sha256_hex(arr.dump());
}

std::vector<SampleOutcome> ChatModel::sample_n(const ChatRequest& request, std::size_t n) {
  std::vector<SampleOutcome> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      out[i].response = complete(request);
    } catch (const AuthError&) {
      throw;
    } catch (const Error& e) {
      out[i].error = e.what();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::chrono::milliseconds SystemClock::now() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now().time_since_epoch());
}

void SystemClock::sleep_for(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

std::chrono::milliseconds VirtualClock::now() {
  std::lock_guard lock(mu_);
  return now_;
}

void VirtualClock::sleep_for(std::chrono::milliseconds d) {
  std::lock_guard lock(mu_);
  if (d.count() > 0) {
    now_ += d;
    slept_ += d;
  }
}

std::chrono::milliseconds VirtualClock::total_slept() const {
  std::lock_guard lock(mu_);
  return slept_;
}

RateLimiter::RateLimiter(std::size_t requests_per_minute, std::shared_ptr<Clock> clock)
    : rpm_(requests_per_minute), clock_(std::move(clock)) {}

void RateLimiter::acquire() {
  if (rpm_ == 0) return;
  constexpr std::chrono::milliseconds kWindow{60000};
  for (;;) {
    std::chrono::milliseconds wait{0};
    {
      std::lock_guard lock(mu_);
      const auto now = clock_->now();
      while (!admitted_.empty() && admitted_.front() + kWindow <= now) admitted_.pop_front();
      if (admitted_.size() < rpm_) {
        admitted_.push_back(now);
        return;
      }
      wait = admitted_.front() + kWindow - now;
    }
    clock_->sleep_for(wait);
  }
}

std::chrono::milliseconds RetryPolicy::delay(int retry_index, std::mt19937_64& rng) const {
  const auto shift = std::min(retry_index, 30);
  const auto exp = base_delay.count() * (std::int64_t{1} << shift);
  const auto capped = std::min<std::int64_t>(exp, max_delay.count());
  const auto jitter = base_delay.count() > 0
                          ? static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(base_delay.count() + 1))
                          : 0;
  return std::chrono::milliseconds(std::min<std::int64_t>(capped + jitter, max_delay.count()));
}

// ---------------------------------------------------------------------------

ProviderKind provider_kind_from_string(std::string_view name) {
  if (name == "openai") return ProviderKind::kOpenAI;
  if (name == "anthropic") return ProviderKind::kAnthropic;
  if (name == "mock") return ProviderKind::kMock;
  throw ConfigError("unknown provider '" + std::string(name) + "'");
}

std::string_view to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::kOpenAI: return "openai";
    case ProviderKind::kAnthropic: return "anthropic";
    case ProviderKind::kMock: return "mock";
  }
  return "mock";
}

ProviderProfile ProviderProfile::for_family(std::string_view family) {
  ProviderProfile p;
  if (family == "gpt") {
    p.kind = ProviderKind::kOpenAI;
    p.api_key_env = "OPENAI_API_KEY";
    p.temperature = 1.0;
    p.top_p = 1.0;
  } else if (family == "claude") {
    p.kind = ProviderKind::kAnthropic;
    p.api_key_env = "ANTHROPIC_API_KEY";
    p.temperature = 1.0;
    p.top_p = 0.7;
  } else if (family == "open_chat") {
    p.kind = ProviderKind::kOpenAI;
    p.api_key_env = "OPENCHAT_API_KEY";
    p.temperature = 1.0;
    p.top_p = 1.0;
  } else if (family == "mock") {
    p.kind = ProviderKind::kMock;
  } else {
    throw ConfigError("unknown model family '" + std::string(family) + "'");
  }
  return p;
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str()); v && *v) return std::string(v);
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

struct Endpoint {
  std::string origin;
  std::string path;
};

Endpoint endpoint_for(const ProviderProfile& p) {
  std::string base = p.base_url;
  if (base.empty())
    base = p.kind == ProviderKind::kAnthropic ? "https://api.anthropic.com" : "https://api.openai.com";
  while (!base.empty() && base.back() == '/') base.pop_back();
  const auto scheme = base.find("://");
  const auto slash = base.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  Endpoint ep;
  ep.origin = base.substr(0, slash);
  const std::string prefix = slash == std::string::npos ? "" : base.substr(slash);
  if (p.kind == ProviderKind::kAnthropic)
    ep.path = (prefix.empty() ? "/v1" : prefix) + "/messages";
  else
    ep.path = (prefix.empty() ? "/v1" : prefix) + "/chat/completions";
  return ep;
}

bool transient(int status) { return status == 0 || status == 429 || status >= 500; }

}  // namespace

HttpChatModel::HttpChatModel(ProviderProfile profile, std::shared_ptr<HttpTransport> transport,
                             std::shared_ptr<Clock> clock, std::shared_ptr<RateLimiter> limiter,
                             EnvLookup env, RequestObserver observer)
    : profile_(std::move(profile)),
      transport_(std::move(transport)),
      clock_(std::move(clock)),
      limiter_(std::move(limiter)),
      env_(std::move(env)),
      observer_(std::move(observer)),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(profile_.max_concurrency, 1, 1024))),
      jitter_rng_(profile_.jitter_seed) {}

std::string HttpChatModel::request_body(const ChatRequest& request) const {
  json body;
  body["model"] = request.model_id.empty() ? profile_.model_id : request.model_id;
  json messages = json::array();
  std::string system;
  for (const auto& m : request.messages) {
    if (profile_.kind == ProviderKind::kAnthropic && m.role == Role::kSystem) {
      if (!system.empty()) system += "\n\n";
      system += m.content;
      continue;
    }
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  if (!system.empty()) body["system"] = system;
  body["messages"] = std::move(messages);
  body["max_tokens"] = request.max_tokens;
  body["temperature"] = request.temperature;
  body["top_p"] = request.top_p;
  return body.dump();
}

ChatResponse HttpChatModel::parse_response(const std::string& text) const {
  const auto body = json::parse(text, nullptr, false);
  if (body.is_discarded()) throw ProviderError(200, "response is not JSON: " + text);
  ChatResponse r;
  try {
    if (profile_.kind == ProviderKind::kAnthropic) {
      for (const auto& block : body.at("content"))
        if (block.value("type", "") == "text") r.content += block.at("text").get<std::string>();
      r.finish_reason = body.value("stop_reason", "");
      if (body.contains("usage")) {
        r.usage.prompt_tokens = body["usage"].value("input_tokens", 0);
        r.usage.completion_tokens = body["usage"].value("output_tokens", 0);
      }
    } else {
      const auto& choice = body.at("choices").at(0);
      const auto& content = choice.at("message").at("content");
      if (!content.is_null()) r.content = content.get<std::string>();
      r.finish_reason = choice.value("finish_reason", "");
      if (body.contains("usage")) {
        r.usage.prompt_tokens = body["usage"].value("prompt_tokens", 0);
        r.usage.completion_tokens = body["usage"].value("completion_tokens", 0);
      }
    }
  } catch (const json::exception& e) {
    throw ProviderError(200, std::string("unexpected response shape: ") + e.what());
  }
  return r;
}

ChatResponse HttpChatModel::complete(const ChatRequest& request) {
  request.validate();
  std::multimap<std::string, std::string> headers;
  if (!profile_.api_key_env.empty()) {
    const auto key = env_(profile_.api_key_env);
    if (!key) throw AuthError(profile_.api_key_env);
    if (profile_.kind == ProviderKind::kAnthropic) {
      headers.emplace("x-api-key", *key);
      headers.emplace("anthropic-version", "2023-06-01");
    } else {
      headers.emplace("Authorization", "Bearer " + *key);
    }
  }
  const auto ep = endpoint_for(profile_);
  const auto body = request_body(request);
  const int attempts = std::max(1, profile_.retry.max_attempts);

  HttpResult last;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::chrono::milliseconds d;
      {
        std::lock_guard lock(rng_mu_);
        d = profile_.retry.delay(attempt - 1, jitter_rng_);
      }
      clock_->sleep_for(d);
    }
    if (limiter_) limiter_->acquire();
    const auto start = clock_->now();
    slots_.acquire();
    try {
      last = transport_->post(ep.origin, ep.path, headers, body, profile_.timeout);
    } catch (...) {
      slots_.release();
      throw;
    }
    slots_.release();
    if (last.status == 200) {
      auto r = parse_response(last.body);
      r.latency_ms = (clock_->now() - start).count();
      r.retries = attempt;
      if (observer_) observer_(request, &r, "");
      return r;
    }
    if (!transient(last.status)) break;
  }

  std::string error;
  try {
    if (last.status == 401 || last.status == 403) throw AuthError(profile_.api_key_env, last.status);
    if (last.status == 429) throw RateLimited(attempts);
    if (last.status == 0 && last.timed_out) throw TimeoutError(ep.origin + ep.path);
    throw ProviderError(last.status, last.status == 0 ? last.error : last.body);
  } catch (const Error& e) {
    if (observer_) observer_(request, nullptr, e.what());
    throw;
  }
}

// ---------------------------------------------------------------------------

MockChatModel::MockChatModel(std::string model_id) : model_id_(std::move(model_id)) {}

void MockChatModel::load_fixtures(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open fixture file " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("reply")) throw DatasetError("malformed fixture", lineno);
    std::string reply = j["reply"].get<std::string>();
    if (j.contains("hash")) {
      add_fixture(j["hash"].get<std::string>(), std::move(reply));
    } else if (j.contains("messages")) {
      std::vector<Message> msgs;
      for (const auto& m : j["messages"])
        msgs.push_back({role_from_string(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
      add_fixture(msgs, std::move(reply));
    } else {
      throw DatasetError("fixture needs 'hash' or 'messages'", lineno);
    }
  }
}

void MockChatModel::add_fixture(const std::string& hash, std::string reply) {
  std::lock_guard lock(mu_);
  fixtures_[hash].push_back(std::move(reply));
}

void MockChatModel::add_fixture(const std::vector<Message>& messages, std::string reply) {
  add_fixture(message_hash(messages), std::move(reply));
}

void MockChatModel::set_responder(Responder responder) {
  std::lock_guard lock(mu_);
  responder_ = std::move(responder);
}

void MockChatModel::set_observer(RequestObserver observer) {
  std::lock_guard lock(mu_);
  observer_ = std::move(observer);
}

ChatResponse MockChatModel::complete(const ChatRequest& request) {
  request.validate();
  const auto key = message_hash(request.messages);
  std::optional<std::string> reply;
  RequestObserver observer;
  Responder responder;
  std::size_t index = 0;
  {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
    observer = observer_;
    index = cursor_[key]++;
    if (auto it = fixtures_.find(key); it != fixtures_.end())
      reply = it->second[index % it->second.size()];
    else
      responder = responder_;
  }
  if (!reply && responder) reply = responder(request, index);
  if (!reply) {
    const std::string err = "no fixture for request " + key;
    if (observer) observer(request, nullptr, err);
    throw ProviderError(404, err);
  }
  ChatResponse r;
  r.content = *reply;
  if (observer) observer(request, &r, "");
  return r;
}

std::size_t MockChatModel::call_count() const {
  std::lock_guard lock(mu_);
  return requests_.size();
}

std::vector<ChatRequest> MockChatModel::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::shared_ptr<ChatModel> make_chat_model(const ProviderProfile& profile, const ClientContext& context) {
  if (profile.kind == ProviderKind::kMock) {
    auto mock = std::make_shared<MockChatModel>(profile.model_id);
    if (!profile.fixtures.empty()) mock->load_fixtures(profile.fixtures);
    if (context.observer) mock->set_observer(context.observer);
    return mock;
  }
  auto clock = context.clock ? context.clock : std::make_shared<SystemClock>();
  auto transport = context.transport ? context.transport : make_httplib_transport();
  auto limiter = std::make_shared<RateLimiter>(profile.requests_per_minute, clock);
  return std::make_shared<HttpChatModel>(profile, std::move(transport), std::move(clock), std::move(limiter),
                                         context.env ? context.env : EnvLookup(process_env), context.observer);
}

}  // namespace verbcal
