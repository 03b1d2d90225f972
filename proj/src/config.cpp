#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "verbcal/error.hpp"
#include "verbcal/harness.hpp"
#include "verbcal/hashing.hpp"

namespace verbcal {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown field '" + key + "' in " + where);
  }
}

ProviderProfile parse_profile(const std::string& name, const json& j, const fs::path& base) {
  reject_unknown(j,
                 {"family", "provider", "model_id", "base_url", "api_key_env", "temperature", "top_p",
                  "max_tokens", "max_tokens_cot", "requests_per_minute", "max_concurrency", "timeout_s",
                  "max_attempts", "backoff_base_ms", "backoff_max_ms", "fixtures", "jitter_seed"},
                 "profile " + name);
  ProviderProfile p;
  if (j.contains("family"))
    p = ProviderProfile::for_family(j["family"].get<std::string>());
  else if (j.contains("provider"))
    p.kind = provider_kind_from_string(j["provider"].get<std::string>());
  else
    throw ConfigError("profile " + name + " needs 'family' or 'provider'");
  if (j.contains("provider")) p.kind = provider_kind_from_string(j["provider"].get<std::string>());
  p.name = name;
  p.model_id = get_or<std::string>(j, "model_id", "");
  if (p.model_id.empty()) throw ConfigError("profile " + name + " needs 'model_id'");
  p.base_url = get_or<std::string>(j, "base_url", p.base_url);
  p.api_key_env = get_or<std::string>(j, "api_key_env", p.api_key_env);
  p.temperature = get_or<double>(j, "temperature", p.temperature);
  p.top_p = get_or<double>(j, "top_p", p.top_p);
  p.max_tokens = get_or<int>(j, "max_tokens", p.max_tokens);
  p.max_tokens_cot = get_or<int>(j, "max_tokens_cot", p.max_tokens_cot);
  p.requests_per_minute = get_or<std::size_t>(j, "requests_per_minute", p.requests_per_minute);
  p.max_concurrency = get_or<std::size_t>(j, "max_concurrency", p.max_concurrency);
  p.timeout = std::chrono::milliseconds(static_cast<long long>(get_or<double>(j, "timeout_s", 60.0) * 1000));
  p.retry.max_attempts = get_or<int>(j, "max_attempts", p.retry.max_attempts);
  p.retry.base_delay = std::chrono::milliseconds(get_or<long long>(j, "backoff_base_ms", p.retry.base_delay.count()));
  p.retry.max_delay = std::chrono::milliseconds(get_or<long long>(j, "backoff_max_ms", p.retry.max_delay.count()));
  p.jitter_seed = get_or<std::uint64_t>(j, "jitter_seed", 0);
  if (j.contains("fixtures")) p.fixtures = resolve(base, j["fixtures"].get<std::string>()).string();
  if (p.kind == ProviderKind::kMock) p.api_key_env.clear();
  return p;
}

MethodSpec parse_method(const json& j, const fs::path& base) {
  reject_unknown(j, {"kind", "k", "n_samples", "expression_map_mode", "name", "template_file"}, "method");
  MethodSpec m;
  if (!j.contains("kind")) throw ConfigError("method needs 'kind'");
  try {
    m.kind = method_kind_from_string(j["kind"].get<std::string>());
    if (j.contains("k")) {
      if (!m.uses_top_k()) throw ConfigError("'k' is only valid for top-k methods");
      m.k = j["k"].get<int>();
    }
    if (j.contains("n_samples")) {
      if (!m.uses_sampling()) throw ConfigError("'n_samples' is only valid for sampling methods");
      m.n_samples = j["n_samples"].get<int>();
    }
    if (j.contains("expression_map_mode"))
      m.expression_mode = expression_mode_from_string(j["expression_map_mode"].get<std::string>());
    m.name = get_or<std::string>(j, "name", "");
    if (j.contains("template_file")) {
      const auto path = resolve(base, j["template_file"].get<std::string>());
      std::ifstream in(path, std::ios::binary);
      if (!in) throw ConfigError("cannot open template file " + path.string());
      std::stringstream ss;
      ss << in.rdbuf();
      m.custom_templates = parse_template_file(ss.str());
    }
    m.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return m;
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text, const fs::path& base_dir) {
  const auto j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("config is not a JSON object");
  reject_unknown(j,
                 {"output_dir", "datasets", "methods", "profiles", "models", "judge", "expressions", "num_bins",
                  "num_folds", "fold_seed", "workers", "fast_path", "judge_failures_as_incorrect",
                  "min_usage_fraction", "deterministic"},
                 "config");
  RunConfig c;
  c.output_dir = resolve(base_dir, get_or<std::string>(j, "output_dir", ""));
  c.num_bins = get_or<std::size_t>(j, "num_bins", kDefaultNumBins);
  c.num_folds = get_or<std::size_t>(j, "num_folds", 5);
  if (!j.contains("fold_seed")) throw ConfigError("config needs an explicit 'fold_seed'");
  c.fold_seed = j["fold_seed"].get<std::uint64_t>();
  c.workers = get_or<std::size_t>(j, "workers", 1);
  c.fast_path = get_or<bool>(j, "fast_path", true);
  c.judge_failures_as_incorrect = get_or<bool>(j, "judge_failures_as_incorrect", false);
  if (j.contains("min_usage_fraction") && !j["min_usage_fraction"].is_null())
    c.min_usage_fraction = j["min_usage_fraction"].get<double>();

  const auto profiles = get_or<json>(j, "profiles", json::object());
  for (const auto& [name, pj] : profiles.items())
    c.profiles[name] = parse_profile(name, pj, base_dir);
  c.models = get_or<std::vector<std::string>>(j, "models", {});
  c.judge = get_or<std::string>(j, "judge", "");

  for (const auto& dj : get_or<json>(j, "datasets", json::array())) {
    reject_unknown(dj, {"name", "path", "format", "sample", "seed", "judge"}, "dataset");
    DatasetRef d;
    d.name = get_or<std::string>(dj, "name", "");
    d.path = resolve(base_dir, get_or<std::string>(dj, "path", "")).string();
    d.format = dataset_format_from_string(get_or<std::string>(dj, "format", "canonical"));
    if (dj.contains("sample")) d.sample = dj["sample"].get<std::size_t>();
    if (dj.contains("seed")) d.seed = dj["seed"].get<std::uint64_t>();
    d.judge = get_or<std::string>(dj, "judge", "");
    c.datasets.push_back(std::move(d));
  }
  for (const auto& mj : get_or<json>(j, "methods", json::array())) c.methods.push_back(parse_method(mj, base_dir));

  const auto expr = get_or<std::string>(j, "expressions", "");
  if (!expr.empty()) {
    c.expressions_path = resolve(base_dir, expr).string();
    c.expressions = ExpressionMap::load_tsv(c.expressions_path);
  }
  bool all_mock = !c.profiles.empty();
  for (const auto& [name, p] : c.profiles) all_mock = all_mock && p.kind == ProviderKind::kMock;
  c.deterministic = get_or<bool>(j, "deterministic", all_mock);
  c.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str(), path.parent_path());
}

void RunConfig::validate() const {
  if (output_dir.empty()) throw ConfigError("config needs 'output_dir'");
  if (num_bins < 1) throw ConfigError("num_bins must be at least 1");
  if (num_folds < 2) throw ConfigError("num_folds must be at least 2");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (datasets.empty()) throw ConfigError("config lists no datasets");
  if (methods.empty()) throw ConfigError("config lists no methods");
  if (models.empty()) throw ConfigError("config lists no models");
  auto need_profile = [&](const std::string& name, const std::string& role) {
    if (!profiles.count(name)) throw ConfigError(role + " refers to undefined profile '" + name + "'");
  };
  for (const auto& m : models) need_profile(m, "models");
  if (judge.empty()) throw ConfigError("config needs a default 'judge' profile");
  need_profile(judge, "judge");
  std::set<std::string> names;
  for (const auto& d : datasets) {
    if (d.name.empty()) throw ConfigError("every dataset needs a 'name'");
    if (!names.insert(d.name).second) throw ConfigError("duplicate dataset name '" + d.name + "'");
    if (d.path.empty()) throw ConfigError("dataset " + d.name + " needs a 'path'");
    if (d.sample && !d.seed) throw ConfigError("dataset " + d.name + " samples questions but has no 'seed'");
    if (!d.judge.empty()) need_profile(d.judge, "dataset " + d.name + " judge");
  }
  std::set<std::string> method_names;
  for (const auto& m : methods) {
    if (!method_names.insert(m.display_name()).second)
      throw ConfigError("two methods share the name '" + m.display_name() + "'");
    if (m.kind == MethodKind::kLing1S && expressions.empty())
      throw ConfigError("ling_1s needs an 'expressions' file");
  }
  if (min_usage_fraction && !(*min_usage_fraction >= 0.0 && *min_usage_fraction <= 1.0))
    throw ConfigError("min_usage_fraction must be in [0,1]");
}

std::string method_fingerprint(const MethodSpec& method, const ExpressionMap& expressions) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(method.kind);
  j["k"] = method.k;
  if (method.uses_sampling()) j["n_samples"] = method.n_samples;
  std::vector<std::string> templates;
  for (int s = 1; s <= method.stages(); ++s) templates.push_back(template_text(method, s));
  j["templates"] = templates;
  if (method.kind == MethodKind::kLing1S) j["expressions"] = expressions.expressions();
  return sha256_hex(j.dump()).substr(0, 16);
}

std::vector<Question> load_dataset(const DatasetRef& ref) {
  auto questions = load_questions(ref.path, ref.format, ref.name);
  if (ref.sample) questions = sample_eval_set(questions, *ref.sample, ref.seed.value_or(0));
  return questions;
}

}  // namespace verbcal
