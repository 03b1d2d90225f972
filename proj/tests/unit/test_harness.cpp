#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "../support/sim_world.hpp"
#include "verbcal/error.hpp"
#include "verbcal/harness.hpp"
#include "verbcal/scaling.hpp"

using namespace verbcal;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("verbcal_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string expressions_tsv() { return std::string(VERBCAL_SOURCE_DIR) + "/config/expressions.tsv"; }

std::vector<std::pair<std::string, double>> expression_entries() {
  return ExpressionMap::load_tsv(expressions_tsv()).entries();
}

json base_config(const fs::path& dir, const json& methods, int workers = 1) {
  return {{"output_dir", (dir / "out").string()},
          {"datasets", json::array({json::object({{"name", "sim"}, {"path", (dir / "sim.jsonl").string()}})})},
          {"methods", methods},
          {"profiles", json::object({{"m", json::object({{"provider", "mock"}, {"model_id", "mock-model"}})},
                                     {"judge", json::object({{"provider", "mock"},
                                                             {"model_id", "mock-judge"},
                                                             {"temperature", 0.0}})}})},
          {"models", {"m"}},
          {"judge", "judge"},
          {"expressions", expressions_tsv()},
          {"fold_seed", 3},
          {"num_folds", 5},
          {"workers", workers}};
}

json three_methods() {
  return json::array({{{"kind", "label_prob"}, {"n_samples", 10}},
                      {{"kind", "verb_1s_topk"}, {"k", 4}},
                      {{"kind", "ling_1s"}}});
}

struct Workspace {
  fs::path dir;
  RunConfig config;
  std::unique_ptr<sim::World> world;
};

Workspace workspace(const std::string& name, const json& methods, sim::Options opts = {}, int workers = 1) {
  Workspace w;
  w.dir = fresh_dir(name);
  opts.expressions = expression_entries();
  w.world = std::make_unique<sim::World>(opts);
  save_canonical(w.world->questions(), (w.dir / "sim.jsonl").string());
  w.config = RunConfig::from_json(base_config(w.dir, methods, workers).dump(), w.dir);
  return w;
}

// Counts every request made by models the factory hands out.
struct CountingFactory {
  const sim::World& world;
  std::shared_ptr<std::atomic<std::size_t>> calls = std::make_shared<std::atomic<std::size_t>>(0);
  ModelFactory make() const {
    auto counter = calls;
    auto base = world.factory();
    return [counter, base](const ProviderProfile& p) {
      auto m = std::dynamic_pointer_cast<MockChatModel>(base(p));
      m->set_observer([counter](const ChatRequest&, const ChatResponse*, const std::string&) { ++*counter; });
      return std::static_pointer_cast<ChatModel>(m);
    };
  }
};

ElicitationRecord record(const std::string& id, double conf, bool correct, MethodKind kind = MethodKind::kVerb1STopK) {
  ElicitationRecord r;
  r.question_id = id;
  r.dataset = "synthetic";
  r.model_id = "mock-model";
  r.method.kind = kind;
  r.method_fingerprint = method_fingerprint(r.method, ExpressionMap{});
  r.answer = "a";
  r.confidence = conf;
  r.correct = correct;
  r.grade_source = "exact";
  return r;
}

RunConfig scoring_config(const std::vector<MethodSpec>& methods) {
  RunConfig c;
  c.output_dir = fs::temp_directory_path();
  c.datasets.push_back({"synthetic", "unused", DatasetFormat::kCanonical, {}, {}, ""});
  c.methods = methods;
  ProviderProfile p;
  p.name = "m";
  p.model_id = "mock-model";
  c.profiles["m"] = p;
  c.models = {"m"};
  c.judge = "m";
  c.expressions = ExpressionMap::load_tsv(expressions_tsv());
  return c;
}

const MethodReport& row(const CalibrationReport& rep, const std::string& method) {
  for (const auto& r : rep.rows)
    if (r.method == method) return r;
  throw std::runtime_error("no row " + method);
}

}  // namespace

// ---------------------------------------------------------------------------

TEST(Config, ParsesAndResolvesPaths) {
  const auto dir = fresh_dir("config");
  auto j = base_config(dir, three_methods());
  j["output_dir"] = "rel_out";
  j["datasets"][0]["path"] = "data/sim.jsonl";
  const auto c = RunConfig::from_json(j.dump(), dir);
  EXPECT_EQ(c.output_dir, dir / "rel_out");
  EXPECT_EQ(c.datasets[0].path, (dir / "data/sim.jsonl").string());
  EXPECT_EQ(c.methods.size(), 3u);
  EXPECT_EQ(c.methods[1].k, 4);
  EXPECT_TRUE(c.deterministic);
  EXPECT_EQ(c.profiles.at("judge").temperature, 0.0);
  EXPECT_EQ(c.expressions.size(), 14u);
}

TEST(Config, RejectsInvalid) {
  const auto dir = fresh_dir("config_bad");
  auto bad = [&](auto mutate) {
    auto j = base_config(dir, three_methods());
    mutate(j);
    EXPECT_THROW(RunConfig::from_json(j.dump(), dir), ConfigError) << j.dump();
  };
  bad([](json& j) { j.erase("fold_seed"); });
  bad([](json& j) { j["models"] = {"nobody"}; });
  bad([](json& j) { j["judge"] = "nobody"; });
  bad([](json& j) { j["datasets"][0]["sample"] = 5; });
  bad([](json& j) { j["datasets"][0]["judge"] = "ghost"; });
  bad([](json& j) { j["datasets"].push_back(j["datasets"][0]); });
  bad([](json& j) { j["colour"] = "blue"; });
  bad([](json& j) { j["methods"].push_back({{"kind", "label_prob"}}); });
  bad([](json& j) { j["methods"][0]["k"] = 2; });
  bad([](json& j) { j["methods"][1]["kind"] = "verb_3s"; });
  bad([](json& j) { j.erase("expressions"); });
  bad([](json& j) { j["num_folds"] = 1; });
  bad([](json& j) { j["profiles"]["m"].erase("model_id"); });
  bad([](json& j) { j["profiles"]["m"]["provider"] = "carrier-pigeon"; });
  EXPECT_THROW(RunConfig::from_json("[1,2]", dir), ConfigError);
  EXPECT_THROW(RunConfig::load(dir / "missing.json"), ConfigError);
}

TEST(Fingerprint, TracksWhatTheModelSees) {
  const auto expressions = ExpressionMap::load_tsv(expressions_tsv());
  MethodSpec a;
  a.kind = MethodKind::kVerb1STopK;
  a.k = 2;
  auto b = a;
  EXPECT_EQ(method_fingerprint(a, expressions), method_fingerprint(b, expressions));
  b.k = 3;
  EXPECT_NE(method_fingerprint(a, expressions), method_fingerprint(b, expressions));
  b = a;
  b.custom_templates[1] = "Guess two things about ${THE_QUESTION}";
  EXPECT_NE(method_fingerprint(a, expressions), method_fingerprint(b, expressions));

  MethodSpec human, opt;
  human.kind = opt.kind = MethodKind::kLing1S;
  opt.expression_mode = ExpressionMapMode::kOptimized;
  EXPECT_EQ(method_fingerprint(human, expressions), method_fingerprint(opt, expressions));
  auto fewer = expressions;
  fewer = ExpressionMap({expressions.entries().begin(), expressions.entries().begin() + 5});
  EXPECT_NE(method_fingerprint(human, expressions), method_fingerprint(human, fewer));

  MethodSpec s10, s20;
  s10.kind = s20.kind = MethodKind::kLabelProb;
  s20.n_samples = 20;
  EXPECT_NE(method_fingerprint(s10, expressions), method_fingerprint(s20, expressions));
}

TEST(Manifest, RecordRoundTrip) {
  auto r = record("q1", 0.75, true);
  r.alternates = {{"a", 0.75}, {"b", 0.2}};
  r.confidence_expression = "Likely";
  r.parse_warnings = {"w"};
  r.transcripts = {{1, "prompt", "reply"}};
  r.method.k = 2;
  const auto line = record_to_json(r);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_EQ(record_to_json(record_from_json(line)), line);

  const auto dir = fresh_dir("manifest");
  spit(dir / "m.jsonl", line + "\n");
  try {
    read_manifest(dir / "m.jsonl");
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  spit(dir / "m.jsonl", "{\"schema\":\"verbcal.manifest\",\"version\":1}\n" + line + "\n{broken\n");
  try {
    read_manifest(dir / "m.jsonl");
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Run, MockEndToEnd) {
  auto w = workspace("e2e", three_methods());
  const auto summary = run(w.config, w.world->factory());
  EXPECT_EQ(summary.tasks, 60u);
  EXPECT_EQ(summary.written, 60u);
  const auto records = read_manifest(w.config.manifest_path());
  ASSERT_EQ(records.size(), 60u);
  std::set<std::string> keys;
  for (const auto& r : records) {
    keys.insert(r.question_id + "|" + r.method_fingerprint + "|" + r.model_id);
    EXPECT_EQ(r.status, RecordStatus::kOk) << r.failure;
    EXPECT_TRUE(r.correct.has_value());
    EXPECT_EQ(r.model_id, "mock-model");
  }
  EXPECT_EQ(keys.size(), 60u);
  // Task order: method-major, questions in dataset order.
  EXPECT_EQ(records[0].method.kind, MethodKind::kLabelProb);
  EXPECT_EQ(records[20].method.kind, MethodKind::kVerb1STopK);
  EXPECT_EQ(records[59].method.kind, MethodKind::kLing1S);
  EXPECT_EQ(records[59].question_id, "q0019");

  // Grades agree with the simulated world for the single-answer methods.
  for (std::size_t i = 20; i < 60; ++i) {
    const auto& item = w.world->items()[i % 20];
    EXPECT_EQ(*records[i].correct, item.correct) << records[i].question_id;
  }
  EXPECT_TRUE(fs::exists(w.config.request_log_path()));
  EXPECT_TRUE(fs::exists(w.config.cache_path()));
}

TEST(Run, ResumeIssuesNoCalls) {
  auto w = workspace("resume", three_methods());
  CountingFactory first{*w.world};
  run(w.config, first.make());
  EXPECT_GT(first.calls->load(), 60u);
  const auto before = slurp(w.config.manifest_path());

  CountingFactory second{*w.world};
  const auto summary = run(w.config, second.make());
  EXPECT_EQ(second.calls->load(), 0u);
  EXPECT_EQ(summary.skipped_existing, 60u);
  EXPECT_EQ(summary.written, 0u);
  EXPECT_EQ(slurp(w.config.manifest_path()), before);
}

TEST(Run, ResumeFinishesAPartialManifest) {
  auto w = workspace("partial", three_methods());
  run(w.config, w.world->factory());
  const auto full = slurp(w.config.manifest_path());

  auto w2 = workspace("partial2", three_methods());
  // Keep the header and the first 25 records, as if the run had been killed.
  std::istringstream in(full);
  std::string line, kept;
  for (int i = 0; i < 26 && std::getline(in, line); ++i) kept += line + "\n";
  fs::create_directories(w2.config.output_dir);
  spit(w2.config.manifest_path(), kept);
  const auto summary = run(w2.config, w2.world->factory());
  EXPECT_EQ(summary.skipped_existing, 25u);
  EXPECT_EQ(summary.written, 35u);
  const auto a = read_manifest(w.config.manifest_path());
  const auto b = read_manifest(w2.config.manifest_path());
  ASSERT_EQ(a.size(), b.size());
  // The resumed run starts with an empty judge cache, so only the grade source may differ.
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto x = a[i], y = b[i];
    x.grade_source = y.grade_source = std::nullopt;
    EXPECT_EQ(record_to_json(x), record_to_json(y));
  }
}

TEST(Run, ManifestIsDeterministicAcrossWorkerCounts) {
  // No two methods here share a first-stage prompt, so the simulated
  // sampler's per-prompt call counter does not depend on scheduling.
  const auto methods = json::array({{{"kind", "label_prob"}, {"n_samples", 10}},
                                    {{"kind", "verb_1s_topk"}, {"k", 1}},
                                    {{"kind", "verb_2s_topk"}, {"k", 2}},
                                    {{"kind", "verb_2s_cot"}},
                                    {{"kind", "ling_1s"}}});
  auto serial = workspace("det1", methods, {}, 1);
  auto parallel = workspace("det4", methods, {}, 4);
  run(serial.config, serial.world->factory());
  run(parallel.config, parallel.world->factory());
  EXPECT_EQ(slurp(serial.config.manifest_path()), slurp(parallel.config.manifest_path()));
  for (const auto& r : read_manifest(serial.config.manifest_path())) EXPECT_EQ(r.status, RecordStatus::kOk) << r.failure;
}

TEST(Run, RepeatedRunsAreByteIdentical) {
  const auto methods = json::array({{{"kind", "label_prob"}, {"n_samples", 10}},
                                    {{"kind", "is_true_prob"}, {"n_samples", 5}},
                                    {{"kind", "entropy"}, {"n_samples", 10}},
                                    {{"kind", "verb_2s_topk"}, {"k", 1}},
                                    {{"kind", "ling_1s"}}});
  std::vector<std::string> manifests, logs, reports;
  for (const char* name : {"rep_a", "rep_b"}) {
    auto w = workspace(name, methods);
    run(w.config, w.world->factory());
    manifests.push_back(slurp(w.config.manifest_path()));
    logs.push_back(slurp(w.config.request_log_path()));
    const auto rep = score(read_manifest(w.config.manifest_path()), w.config);
    reports.push_back(rep.to_json() + render_metrics_table(rep, ReportFormat::kText) + render_diagram_csv(rep));
  }
  // Paths differ only by directory name, which never appears in these files.
  EXPECT_EQ(manifests[0], manifests[1]);
  EXPECT_EQ(logs[0], logs[1]);
  EXPECT_EQ(reports[0], reports[1]);
}

TEST(Run, EntropyRecordsAreAucOnly) {
  auto w = workspace("entropy", json::array({{{"kind", "entropy"}, {"n_samples", 10}}}));
  run(w.config, w.world->factory());
  const auto records = read_manifest(w.config.manifest_path());
  ASSERT_EQ(records.size(), 20u);
  for (const auto& r : records) {
    EXPECT_TRUE(r.auc_only);
    ASSERT_TRUE(r.entropy.has_value());
    EXPECT_GE(*r.entropy, 0.0);
  }
  const auto report = score(records, w.config);
  ASSERT_EQ(report.rows.size(), 1u);
  const auto& e = report.rows[0];
  EXPECT_TRUE(e.auc_only);
  EXPECT_TRUE(e.auc.has_value());
  EXPECT_FALSE(e.ece || e.ece_t || e.bs_t);
  const auto table = render_metrics_table(report, ReportFormat::kText);
  std::istringstream lines(table);
  std::string line;
  bool found = false;
  while (std::getline(lines, line))
    if (line.rfind("Entropy", 0) == 0) {
      found = true;
      std::istringstream cells(line.substr(7));
      std::vector<std::string> v;
      for (std::string c; cells >> c;) v.push_back(c);
      ASSERT_EQ(v.size(), 4u) << line;
      EXPECT_EQ(v[0], "---");
      EXPECT_EQ(v[1], "---");
      EXPECT_EQ(v[2], "---");
      EXPECT_NE(v[3], "---");
    }
  EXPECT_TRUE(found) << table;
}

TEST(Run, AuthErrorAborts) {
  auto w = workspace("auth", three_methods());
  ProviderProfile p = ProviderProfile::for_family("gpt");
  p.name = "m";
  p.model_id = "gpt-x";
  p.api_key_env = "VERBCAL_TEST_KEY_THAT_IS_NEVER_SET";
  w.config.profiles["m"] = p;
  w.config.deterministic = false;
  EXPECT_THROW(run(w.config), AuthError);
}

TEST(Run, ConfigErrorsAbortBeforeAnyWork) {
  auto w = workspace("cfgerr", three_methods());
  w.config.models = {"ghost"};
  EXPECT_THROW(run(w.config, w.world->factory()), ConfigError);
  EXPECT_FALSE(fs::exists(w.config.manifest_path()));
}

// ---------------------------------------------------------------------------

TEST(Score, OverconfidentSingleBin) {
  MethodSpec m;
  m.kind = MethodKind::kVerb1STopK;
  std::vector<ElicitationRecord> records;
  for (int i = 0; i < 100; ++i) records.push_back(record("q" + std::to_string(i), 1.0, i % 10 < 6));
  const auto rep = score(records, scoring_config({m}));
  const auto& r = row(rep, "Verb. 1S top-1");
  // One occupied bin: (1.0 - 0.6)^2.
  EXPECT_NEAR(*r.ece, 0.16, 1e-12);
  EXPECT_NEAR(*r.accuracy, 0.6, 1e-12);
  EXPECT_EQ(r.n_evaluated, 100u);
}

TEST(Score, CalibratedSource) {
  MethodSpec m;
  m.kind = MethodKind::kVerb1STopK;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ElicitationRecord> records;
  std::vector<ConfidencePoint> points;
  for (int i = 0; i < 2000; ++i) {
    const double c = u(rng);
    const bool ok = u(rng) < c;
    records.push_back(record("q" + std::to_string(i), c, ok));
    points.push_back({c, ok});
  }
  const auto rep = score(records, scoring_config({m}));
  const auto& r = rep.rows.at(0);
  EXPECT_LE(*r.ece, 0.02);
  EXPECT_TRUE(r.warnings.empty());
  // Each rotation fits on 400 points (sd of beta ~0.11), so the bound applies
  // to the pooled fit and the rotation mean rather than every rotation.
  const double full = fit_temperature(points).beta;
  EXPECT_GE(full, 0.8);
  EXPECT_LE(full, 1.25);
  ASSERT_EQ(r.temperatures.size(), 5u);
  double mean = 0.0;
  for (double b : r.temperatures) mean += b / 5.0;
  EXPECT_GE(mean, 0.8);
  EXPECT_LE(mean, 1.25);
}

TEST(Score, ReportStructure) {
  const auto methods = json::array({{{"kind", "label_prob"}, {"n_samples", 10}},
                                    {{"kind", "verb_1s_topk"}, {"k", 4}},
                                    {{"kind", "entropy"}, {"n_samples", 10}},
                                    {{"kind", "ling_1s"}},
                                    {{"kind", "ling_1s"}, {"expression_map_mode", "optimized"}}});
  sim::Options opts;
  opts.questions = 60;
  opts.refuse_every = 7;
  auto w = workspace("structure", methods, opts);
  run(w.config, w.world->factory());
  const auto manifest_before = slurp(w.config.manifest_path());
  const auto records = read_manifest(w.config.manifest_path());
  EXPECT_EQ(records.size(), 240u);  // the two Ling. rows share records

  const auto rep = score(records, w.config);
  ASSERT_EQ(rep.rows.size(), 5u);
  std::vector<std::string> names;
  for (const auto& m : w.config.methods) names.push_back(m.display_name());
  for (std::size_t i = 0; i < names.size(); ++i) EXPECT_EQ(rep.rows[i].method, names[i]);

  // Rows appear in the text table in config order.
  const auto table = render_metrics_table(rep, ReportFormat::kText);
  std::size_t pos = 0;
  for (const auto& n : names) {
    const auto at = table.find("\n" + n + " ", pos);
    ASSERT_NE(at, std::string::npos) << n << "\n" << table;
    pos = at + 1;
  }

  for (const auto& r : rep.rows) {
    EXPECT_EQ(r.n_attempted, 60u);
    EXPECT_EQ(r.n_evaluated + r.n_parse_failed, r.n_attempted) << r.method;
    if (!r.auc_only) EXPECT_EQ(r.bins.size(), 10u) << r.method;
  }
  // Refusals hit every 7th question for the verbalized prompts only.
  EXPECT_EQ(row(rep, "Verb. 1S top-4").n_parse_failed, 9u);
  EXPECT_EQ(row(rep, "Label prob.").n_parse_failed, 0u);

  for (const auto* name : {"Ling. 1S-human", "Ling. 1S-opt."}) {
    const auto& r = row(rep, name);
    std::size_t total = 0;
    for (const auto& [e, n] : r.expression_usage) total += n;
    EXPECT_EQ(total, r.n_evaluated) << name;
  }

  std::istringstream diagram(render_diagram_jsonl(rep));
  std::map<std::string, int> per_row;
  for (std::string line; std::getline(diagram, line);) {
    const auto j = json::parse(line);
    ++per_row[j.at("method").get<std::string>()];
  }
  for (const auto& r : rep.rows)
    if (!r.auc_only) EXPECT_EQ(per_row[r.method], 10) << r.method;

  // Scoring and reporting never touch the manifest.
  const auto again = score(read_manifest(w.config.manifest_path()), w.config);
  EXPECT_EQ(again.to_json(), rep.to_json());
  write_report(rep, ReportFormat::kText, w.dir / "report");
  write_report(rep, ReportFormat::kCsv, w.dir / "report_csv");
  EXPECT_EQ(slurp(w.config.manifest_path()), manifest_before);
  EXPECT_EQ(CalibrationReport::from_json(rep.to_json()).to_json(), rep.to_json());
}

TEST(Score, FailedRecordsNeverEnterMetrics) {
  MethodSpec m;
  m.kind = MethodKind::kVerb1STopK;
  std::vector<ElicitationRecord> records;
  for (int i = 0; i < 50; ++i) records.push_back(record("q" + std::to_string(i), 0.7, i % 10 < 7));
  auto clean = score(records, scoring_config({m}));

  auto polluted = records;
  for (int i = 0; i < 10; ++i) {
    auto r = record("bad" + std::to_string(i), 0.99, false);
    r.status = i < 5 ? RecordStatus::kParseFailed : RecordStatus::kModelFailed;
    r.correct.reset();
    polluted.push_back(r);
  }
  auto j = record("judge_fail", 0.99, false);
  j.status = RecordStatus::kJudgeFailed;
  j.correct.reset();
  polluted.push_back(j);
  auto cfg = scoring_config({m});
  const auto dirty = score(polluted, cfg);
  const auto& a = clean.rows[0];
  const auto& b = dirty.rows[0];
  EXPECT_EQ(b.n_attempted, 61u);
  EXPECT_EQ(b.n_evaluated, 50u);
  EXPECT_EQ(b.n_parse_failed, 11u);
  EXPECT_EQ(b.failures_by_status.at("parse_failed"), 5u);
  EXPECT_EQ(*a.ece, *b.ece);
  EXPECT_EQ(*a.auc, *b.auc);

  cfg.judge_failures_as_incorrect = true;
  const auto counted = score(polluted, cfg);
  EXPECT_EQ(counted.rows[0].n_evaluated, 51u);
  EXPECT_NEAR(*counted.rows[0].accuracy, 35.0 / 51.0, 1e-12);
}

TEST(DryRun, ProjectsRequests) {
  const auto methods = json::array({{{"kind", "label_prob"}, {"n_samples", 10}},
                                    {{"kind", "is_true_prob"}, {"n_samples", 10}},
                                    {{"kind", "verb_1s_topk"}, {"k", 4}},
                                    {{"kind", "verb_2s_cot"}},
                                    {{"kind", "ling_1s"}},
                                    {{"kind", "ling_1s"}, {"expression_map_mode", "optimized"}}});
  auto w = workspace("dry", methods);
  const auto p = project_requests(w.config);
  ASSERT_EQ(p.size(), 5u);  // Ling. human/opt share records
  EXPECT_EQ(p[0].model_requests, 200u);
  EXPECT_EQ(p[0].judge_requests_max, 20u * (1 + 45));
  EXPECT_EQ(p[1].model_requests, 220u);
  EXPECT_EQ(p[2].model_requests, 20u);
  EXPECT_EQ(p[3].model_requests, 40u);
  EXPECT_EQ(p[4].model_requests, 20u);
  for (const auto& r : p) EXPECT_EQ(r.questions, 20u);
  const auto text = format_projection(p);
  EXPECT_NE(text.find("total"), std::string::npos);
  EXPECT_FALSE(fs::exists(w.config.manifest_path()));
}
