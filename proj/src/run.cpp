#include <atomic>
#include <condition_variable>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "verbcal/error.hpp"
#include "verbcal/harness.hpp"

namespace verbcal {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

thread_local std::vector<std::string>* t_request_log = nullptr;

// Appends every request and its outcome to the calling thread's task log.
class LoggingChatModel final : public ChatModel {
 public:
  LoggingChatModel(std::shared_ptr<ChatModel> inner, bool deterministic)
      : inner_(std::move(inner)), deterministic_(deterministic) {}

  ChatResponse complete(const ChatRequest& request) override {
    try {
      auto response = inner_->complete(request);
      log(request, &response, "");
      return response;
    } catch (const std::exception& e) {
      log(request, nullptr, e.what());
      throw;
    }
  }

  std::vector<SampleOutcome> sample_n(const ChatRequest& request, std::size_t n) override {
    auto outcomes = inner_->sample_n(request, n);
    for (const auto& o : outcomes) log(request, o.response ? &*o.response : nullptr, o.error);
    return outcomes;
  }

  std::string model_id() const override { return inner_->model_id(); }

 private:
  void log(const ChatRequest& request, const ChatResponse* response, const std::string& error) const {
    if (!t_request_log) return;
    json j;
    j["model_id"] = inner_->model_id();
    json msgs = json::array();
    for (const auto& m : request.messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    j["messages"] = std::move(msgs);
    j["temperature"] = request.temperature;
    j["top_p"] = request.top_p;
    j["max_tokens"] = request.max_tokens;
    if (response) {
      j["response"] = response->content;
      j["finish_reason"] = response->finish_reason;
      j["prompt_tokens"] = response->usage.prompt_tokens;
      j["completion_tokens"] = response->usage.completion_tokens;
      j["latency_ms"] = deterministic_ ? 0 : response->latency_ms;
      j["retries"] = response->retries;
    } else {
      j["error"] = error;
    }
    t_request_log->push_back(j.dump());
  }

  std::shared_ptr<ChatModel> inner_;
  bool deterministic_;
};

std::string record_key(std::string_view dataset, std::string_view question_id, std::string_view fingerprint,
                       std::string_view model_id) {
  std::string k;
  for (auto part : {dataset, question_id, fingerprint, model_id}) {
    k.append(part);
    k.push_back('\x1f');
  }
  return k;
}

struct Task {
  const Question* question;
  const DatasetRef* dataset;
  const MethodSpec* method;
  std::string fingerprint;
  std::string model;  // profile name
};

struct Slot {
  bool ready = false;
  std::string record;
  std::vector<std::string> requests;
  bool failed = false;
};

std::vector<const MethodSpec*> unique_methods(const RunConfig& config, std::vector<std::string>& fingerprints) {
  std::vector<const MethodSpec*> out;
  std::set<std::string> seen;
  for (const auto& m : config.methods) {
    auto fp = method_fingerprint(m, config.expressions);
    if (seen.insert(fp).second) {
      out.push_back(&m);
      fingerprints.push_back(std::move(fp));
    }
  }
  return out;
}

}  // namespace

RunSummary run(const RunConfig& config, const ModelFactory& factory) {
  config.validate();
  fs::create_directories(config.output_dir);

  std::vector<std::vector<Question>> questions;
  for (const auto& d : config.datasets) questions.push_back(load_dataset(d));

  auto make = [&](const std::string& profile_name) {
    const auto& profile = config.profiles.at(profile_name);
    auto inner = factory ? factory(profile) : make_chat_model(profile, ClientContext{});
    if (!inner) throw ConfigError("model factory returned nothing for profile " + profile_name);
    return std::make_shared<LoggingChatModel>(std::move(inner), config.deterministic);
  };

  std::map<std::string, std::shared_ptr<ChatModel>> models;
  for (const auto& name : config.models) models.emplace(name, make(name));

  auto cache = std::make_shared<EquivalenceCache>(config.cache_path().string());
  EquivalenceOptions eq_options;
  eq_options.fast_path = config.fast_path;
  if (config.deterministic) eq_options.timestamp = [] { return std::int64_t{0}; };
  std::map<std::string, std::unique_ptr<Equivalence>> judges;
  auto judge_for = [&](const DatasetRef& d) -> Equivalence& {
    const std::string name = d.judge.empty() ? config.judge : d.judge;
    auto it = judges.find(name);
    if (it == judges.end()) {
      auto model = models.count(name) ? models.at(name) : make(name);
      it = judges.emplace(name, std::make_unique<Equivalence>(model, cache, eq_options)).first;
    }
    return *it->second;
  };
  std::vector<Equivalence*> dataset_judges;
  for (const auto& d : config.datasets) dataset_judges.push_back(&judge_for(d));

  std::set<std::string> existing;
  const bool fresh = !fs::exists(config.manifest_path()) || fs::file_size(config.manifest_path()) == 0;
  if (!fresh) {
    for (const auto& r : read_manifest(config.manifest_path()))
      existing.insert(record_key(r.dataset, r.question_id, r.method_fingerprint, r.model_id));
  }

  std::vector<std::string> fingerprints;
  const auto methods = unique_methods(config, fingerprints);

  RunSummary summary;
  std::vector<Task> tasks;
  std::vector<std::size_t> task_dataset;
  for (std::size_t di = 0; di < config.datasets.size(); ++di) {
    for (const auto& model_name : config.models) {
      const auto model_id = config.profiles.at(model_name).model_id;
      for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        for (const auto& q : questions[di]) {
          ++summary.tasks;
          if (existing.count(record_key(config.datasets[di].name, q.id, fingerprints[mi], model_id))) {
            ++summary.skipped_existing;
            continue;
          }
          tasks.push_back({&q, &config.datasets[di], methods[mi], fingerprints[mi], model_name});
          task_dataset.push_back(di);
        }
      }
    }
  }

  std::ofstream manifest(config.manifest_path(), std::ios::binary | std::ios::app);
  std::ofstream request_log(config.request_log_path(), std::ios::binary | std::ios::app);
  if (!manifest || !request_log) throw ConfigError("cannot write to " + config.output_dir.string());
  if (fresh) {
    manifest << json{{"schema", "verbcal.manifest"}, {"version", kManifestSchemaVersion}}.dump() << '\n';
    manifest.flush();
  }

  std::vector<Slot> slots(tasks.size());
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;

  auto worker = [&] {
    for (;;) {
      if (abort) return;
      const std::size_t i = next++;
      if (i >= tasks.size()) return;
      const Task& t = tasks[i];
      Slot slot;
      t_request_log = &slot.requests;
      try {
        const auto& profile = config.profiles.at(t.model);
        SamplingConfig sampling{profile.temperature, profile.top_p, profile.max_tokens, profile.max_tokens_cot};
        auto& judge = *dataset_judges[task_dataset[i]];
        Elicitor elicitor(*models.at(t.model), judge, sampling, config.expressions);
        auto record = elicitor.run(*t.question, *t.method);
        record.dataset = t.dataset->name;
        record.method_fingerprint = t.fingerprint;
        if (record.status == RecordStatus::kOk) grade_record(record, *t.question, judge);
        slot.failed = record.status != RecordStatus::kOk;
        slot.record = record_to_json(record);
      } catch (...) {
        t_request_log = nullptr;
        std::lock_guard lock(mu);
        if (!fatal) fatal = std::current_exception();
        abort = true;
        cv.notify_all();
        return;
      }
      t_request_log = nullptr;
      std::lock_guard lock(mu);
      slot.ready = true;
      slots[i] = std::move(slot);
      cv.notify_all();
    }
  };

  const std::size_t n_workers = std::max<std::size_t>(1, std::min(config.workers, tasks.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers && !tasks.empty(); ++w) pool.emplace_back(worker);

  // Commit in task order so the manifest does not depend on scheduling.
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    Slot slot;
    {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return slots[i].ready || abort.load(); });
      if (!slots[i].ready) break;
      slot = std::move(slots[i]);
    }
    for (const auto& line : slot.requests) request_log << line << '\n';
    request_log.flush();
    manifest << slot.record << '\n';
    manifest.flush();
    ++summary.written;
    if (slot.failed) ++summary.failed;
  }
  for (auto& th : pool) th.join();
  if (fatal) std::rethrow_exception(fatal);
  return summary;
}

std::vector<RequestProjection> project_requests(const RunConfig& config) {
  config.validate();
  std::vector<RequestProjection> out;
  std::vector<std::string> fingerprints;
  const auto methods = unique_methods(config, fingerprints);
  const std::size_t n_models = config.models.size();
  for (const auto& d : config.datasets) {
    const std::size_t nq = load_dataset(d).size();
    for (const auto* m : methods) {
      RequestProjection p;
      p.dataset = d.name;
      p.method = m->display_name();
      p.questions = nq;
      const std::size_t n = static_cast<std::size_t>(m->n_samples);
      std::size_t model_per_q = 0, judge_per_q = 1;
      switch (m->kind) {
        case MethodKind::kLabelProb:
        case MethodKind::kEntropy:
          model_per_q = n;
          judge_per_q += n * (n - 1) / 2;
          break;
        case MethodKind::kIsTrueProb:
          model_per_q = 1 + n;
          break;
        case MethodKind::kVerb2STopK:
        case MethodKind::kVerb2SCoT:
          model_per_q = 2;
          break;
        default:
          model_per_q = 1;
      }
      p.model_requests = model_per_q * nq * n_models;
      p.judge_requests_max = judge_per_q * nq * n_models;
      out.push_back(p);
    }
  }
  return out;
}

std::string format_projection(const std::vector<RequestProjection>& projection) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "dataset" << std::setw(18) << "method" << std::right << std::setw(10)
     << "questions" << std::setw(12) << "model_reqs" << std::setw(16) << "judge_reqs_max" << '\n';
  std::size_t model_total = 0, judge_total = 0;
  for (const auto& p : projection) {
    os << std::left << std::setw(16) << p.dataset << std::setw(18) << p.method << std::right << std::setw(10)
       << p.questions << std::setw(12) << p.model_requests << std::setw(16) << p.judge_requests_max << '\n';
    model_total += p.model_requests;
    judge_total += p.judge_requests_max;
  }
  os << std::left << std::setw(34) << "total" << std::right << std::setw(10) << "" << std::setw(12) << model_total
     << std::setw(16) << judge_total << '\n';
  return os.str();
}

}  // namespace verbcal
