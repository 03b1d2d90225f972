#include <algorithm>

#include "verbcal/error.hpp"
#include "verbcal/harness.hpp"

namespace verbcal {

namespace {

void append_warnings(MethodReport& row, const std::vector<RotationWarning>& warnings) {
  for (const auto& w : warnings) row.warnings.push_back(w.rotation + ": " + w.message);
}

MethodReport score_method(std::vector<const ElicitationRecord*> records, const MethodSpec& method,
                          const RunConfig& config) {
  MethodReport row;
  row.method = method.display_name();
  row.kind = std::string(to_string(method.kind));
  row.auc_only = method.auc_only();
  row.n_attempted = records.size();
  std::sort(records.begin(), records.end(),
            [](const auto* a, const auto* b) { return a->question_id < b->question_id; });

  const bool ling = method.kind == MethodKind::kLing1S;
  std::vector<ConfidencePoint> points;
  std::vector<ExpressionRecord> expr_records;
  std::map<std::string, std::size_t> usage;
  for (const auto* r : records) {
    bool usable = r->status == RecordStatus::kOk && r->correct.has_value();
    bool correct = r->correct.value_or(false);
    if (r->status == RecordStatus::kJudgeFailed && config.judge_failures_as_incorrect) {
      usable = true;
      correct = false;
    }
    if (!usable) {
      ++row.failures_by_status[std::string(to_string(r->status))];
      continue;
    }
    double confidence = r->confidence;
    if (ling) {
      if (!r->confidence_expression) {
        ++row.failures_by_status["parse_failed"];
        continue;
      }
      const auto& expr = *r->confidence_expression;
      ++usage[expr];
      expr_records.push_back({expr, correct});
      if (auto p = config.expressions.find(expr)) confidence = *p;
    }
    points.push_back({confidence, correct});
  }
  row.n_evaluated = points.size();
  row.n_parse_failed = row.n_attempted - row.n_evaluated;

  if (ling) {
    for (const auto& e : config.expressions.expressions()) row.expression_usage.emplace_back(e, usage[e]);
    for (const auto& [e, n] : usage)
      if (!config.expressions.contains(e)) row.expression_usage.emplace_back(e, n);
  }

  if (points.empty()) {
    row.warnings.push_back("no evaluable records");
    return row;
  }
  std::size_t n_correct = 0;
  for (const auto& p : points) n_correct += p.correct ? 1 : 0;
  row.accuracy = static_cast<double>(n_correct) / static_cast<double>(points.size());

  if (row.auc_only) {
    row.auc = selective_auc(points);
    return row;
  }

  if (ling && method.expression_mode == ExpressionMapMode::kOptimized) {
    NestedLingOptions opts;
    opts.num_folds = config.num_folds;
    opts.seed = config.fold_seed;
    opts.num_bins = config.num_bins;
    opts.min_usage_fraction = config.min_usage_fraction;
    try {
      const auto expressions = config.expressions.expressions();
      auto res = nested_ling_opt_metrics(expr_records, expressions, config.expressions, opts);
      row.ece = res.ece;
      row.auc = res.auc;
      row.ece_t = res.ece_t;
      row.bs_t = res.bs_t;
      for (const auto& t : res.temperatures) row.temperatures.push_back(t.beta);
      row.bins = bin_points(res.held_out_points, config.num_bins);
      append_warnings(row, res.warnings);
    } catch (const Error& e) {
      row.warnings.push_back(e.what());
    }
    return row;
  }

  row.ece = ece(points, config.num_bins);
  row.auc = selective_auc(points);
  row.bins = bin_points(points, config.num_bins);
  try {
    auto res = cross_fit_metrics(points, config.num_folds, config.fold_seed, config.num_bins);
    row.ece_t = res.ece_t;
    row.bs_t = res.bs_t;
    for (const auto& t : res.temperatures) row.temperatures.push_back(t.beta);
    append_warnings(row, res.warnings);
  } catch (const Error& e) {
    row.warnings.push_back(std::string("temperature scaling: ") + e.what());
  }
  return row;
}

}  // namespace

CalibrationReport score(const std::vector<ElicitationRecord>& manifest, const RunConfig& config) {
  CalibrationReport report;
  report.num_bins = config.num_bins;
  report.num_folds = config.num_folds;
  for (const auto& d : config.datasets) report.datasets.push_back(d.name);
  for (const auto& m : config.models) report.models.push_back(m);
  for (const auto& m : config.methods) report.methods.push_back(m.display_name());

  for (const auto& model_name : config.models) {
    const auto& model_id = config.profiles.at(model_name).model_id;
    for (const auto& method : config.methods) {
      const auto fp = method_fingerprint(method, config.expressions);
      for (const auto& d : config.datasets) {
        std::vector<const ElicitationRecord*> selected;
        for (const auto& r : manifest)
          if (r.dataset == d.name && r.model_id == model_id && r.method_fingerprint == fp) selected.push_back(&r);
        auto row = score_method(std::move(selected), method, config);
        row.dataset = d.name;
        row.model = model_name;
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

}  // namespace verbcal
