#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "verbcal/datasets.hpp"
#include "verbcal/elicitation.hpp"
#include "verbcal/expressions.hpp"
#include "verbcal/metrics.hpp"
#include "verbcal/model_client.hpp"
#include "verbcal/scaling.hpp"

namespace verbcal {

inline constexpr int kManifestSchemaVersion = 1;

struct DatasetRef {
  std::string name;
  std::string path;
  DatasetFormat format = DatasetFormat::kCanonical;
  std::optional<std::size_t> sample;
  std::optional<std::uint64_t> seed;
  std::string judge;  // profile name; empty uses the run default
};

struct RunConfig {
  std::filesystem::path output_dir;
  std::vector<DatasetRef> datasets;
  std::vector<MethodSpec> methods;
  std::map<std::string, ProviderProfile> profiles;
  std::vector<std::string> models;  // profile names
  std::string judge;                // default judge profile name
  std::string expressions_path;
  ExpressionMap expressions;
  std::size_t num_bins = kDefaultNumBins;
  std::size_t num_folds = 5;
  std::uint64_t fold_seed = 0;
  std::size_t workers = 1;
  bool fast_path = true;
  bool judge_failures_as_incorrect = false;
  std::optional<double> min_usage_fraction;
  // Timestamps written as 0; set automatically when every profile is a mock.
  bool deterministic = false;

  // Relative paths resolve against `base_dir`. Throws ConfigError.
  static RunConfig from_json(const std::string& text, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);
  void validate() const;

  std::filesystem::path manifest_path() const { return output_dir / "manifest.jsonl"; }
  std::filesystem::path cache_path() const { return output_dir / "equivalence_cache.jsonl"; }
  std::filesystem::path request_log_path() const { return output_dir / "requests.jsonl"; }
};

// Hash over everything that changes what the model is asked: kind, k,
// n_samples, template text and the offered expression list. The expression
// map mode only affects scoring, so Ling. 1S-human and -opt share records.
std::string method_fingerprint(const MethodSpec& method, const ExpressionMap& expressions);

std::vector<Question> load_dataset(const DatasetRef& ref);

// ---------------------------------------------------------------------------
// Manifest: a schema header line followed by one JSON record per line.

std::string record_to_json(const ElicitationRecord& record);
ElicitationRecord record_from_json(const std::string& line);
std::vector<ElicitationRecord> read_manifest(const std::filesystem::path& path);

using ModelFactory = std::function<std::shared_ptr<ChatModel>(const ProviderProfile&)>;

struct RunSummary {
  std::size_t tasks = 0;
  std::size_t skipped_existing = 0;
  std::size_t written = 0;
  std::size_t failed = 0;
};

// Elicits and grades every (dataset, model, method, question) not already in
// the manifest. Per-record failures are recorded; config and auth errors abort.
RunSummary run(const RunConfig& config, const ModelFactory& factory = {});

struct RequestProjection {
  std::string dataset;
  std::string method;
  std::size_t questions = 0;
  std::size_t model_requests = 0;
  std::size_t judge_requests_max = 0;
};

std::vector<RequestProjection> project_requests(const RunConfig& config);
std::string format_projection(const std::vector<RequestProjection>& projection);

// ---------------------------------------------------------------------------
// Scoring

struct MethodReport {
  std::string dataset;
  std::string model;
  std::string method;
  std::string kind;
  bool auc_only = false;
  std::size_t n_attempted = 0;
  std::size_t n_evaluated = 0;
  std::size_t n_parse_failed = 0;  // every excluded record: parse, model or judge failure
  std::map<std::string, std::size_t> failures_by_status;
  std::optional<double> accuracy;
  std::optional<double> ece;
  std::optional<double> ece_t;
  std::optional<double> bs_t;
  std::optional<double> auc;
  std::vector<double> temperatures;
  std::vector<ReliabilityBin> bins;
  std::vector<std::pair<std::string, std::size_t>> expression_usage;
  std::vector<std::string> warnings;
};

struct CalibrationReport {
  std::size_t num_bins = kDefaultNumBins;
  std::size_t num_folds = 5;
  std::vector<std::string> datasets;
  std::vector<std::string> models;
  std::vector<std::string> methods;
  std::vector<MethodReport> rows;

  std::string to_json() const;
  static CalibrationReport from_json(const std::string& text);
};

CalibrationReport score(const std::vector<ElicitationRecord>& manifest, const RunConfig& config);

enum class ReportFormat { kText, kCsv };
ReportFormat report_format_from_string(std::string_view name);

// Metric table: one block per model, rows = methods, column groups = datasets.
std::string render_metrics_table(const CalibrationReport& report, ReportFormat format);
std::string render_failure_table(const CalibrationReport& report, ReportFormat format);
std::string render_usage(const CalibrationReport& report, ReportFormat format);
// Reliability-diagram records: one per bin per (dataset, model, method).
std::string render_diagram_jsonl(const CalibrationReport& report);
std::string render_diagram_csv(const CalibrationReport& report);

// Writes metrics, failures, usage and diagram files into `dir`; returns the paths.
std::vector<std::filesystem::path> write_report(const CalibrationReport& report, ReportFormat format,
                                                const std::filesystem::path& dir);

}  // namespace verbcal
