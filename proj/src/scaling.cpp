#include "verbcal/scaling.hpp"

#include <algorithm>
#include <cmath>

#include "verbcal/error.hpp"
#include "verbcal/random.hpp"

namespace verbcal {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double clamp_confidence(double p) { return std::clamp(p, kNllClampEpsilon, 1.0 - kNllClampEpsilon); }

double logit(double p) { return std::log(p) - std::log1p(-p); }

std::vector<ConfidencePoint> gather(std::span<const ConfidencePoint> points,
                                    std::span<const std::size_t> idx) {
  std::vector<ConfidencePoint> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(points[i]);
  return out;
}

std::string rotation_name(std::size_t a) { return "fold " + std::to_string(a); }

std::string rotation_name(std::size_t t, std::size_t e) {
  return "temperature fold " + std::to_string(t) + ", eval fold " + std::to_string(e);
}

std::string all_failed(std::string msg, const std::vector<RotationWarning>& warnings) {
  for (std::size_t i = 0; i < warnings.size(); ++i)
    msg += (i ? "; " : ": ") + warnings[i].rotation + ": " + warnings[i].message;
  return msg;
}

}  // namespace

FoldPlan FoldPlan::make(std::size_t n, std::size_t num_folds, std::uint64_t seed) {
  if (num_folds == 0) throw InvalidInput("num_folds must be at least 1");
  FoldPlan plan;
  plan.num_folds = num_folds;
  plan.seed = seed;
  plan.assignments.assign(n, 0);
  const auto perm = seeded_permutation(n, seed);
  const std::size_t base = n / num_folds;
  const std::size_t extra = n % num_folds;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < num_folds; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t j = 0; j < size; ++j) plan.assignments[perm[pos++]] = f;
  }
  return plan;
}

std::vector<std::size_t> FoldPlan::members(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::complement(std::span<const std::size_t> folds) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (std::find(folds.begin(), folds.end(), assignments[i]) == folds.end()) out.push_back(i);
  return out;
}

double scale_confidence(double p, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidInput("beta must be positive and finite");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("confidence outside [0,1]");
  if (p == 0.0 || p == 1.0) return p;
  // p^b / (p^b + (1-p)^b) == sigmoid(b * logit(p))
  const double s = beta * logit(p);
  return s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
}

double temperature_nll(std::span<const ConfidencePoint> points, double beta) {
  double nll = 0.0;
  for (const auto& p : points) {
    const double s = beta * logit(clamp_confidence(p.confidence));
    nll += p.correct ? softplus(-s) : softplus(s);
  }
  return nll;
}

TemperatureFit fit_temperature(std::span<const ConfidencePoint> points) {
  if (points.empty()) throw NoDataError();
  validate_points(points);
  const auto n_correct = std::count_if(points.begin(), points.end(), [](auto& p) { return p.correct; });
  if (n_correct == 0 || static_cast<std::size_t>(n_correct) == points.size()) throw DegenerateLabels();

  TemperatureFit fit;
  fit.fit_size = points.size();
  const bool flat = std::all_of(points.begin(), points.end(),
                                [](auto& p) { return clamp_confidence(p.confidence) == 0.5; });
  if (flat) {
    fit.beta = 1.0;
    fit.nll_at_beta = temperature_nll(points, 1.0);
    fit.unidentifiable = true;
    return fit;
  }

  // The objective is convex in beta, hence unimodal in ln(beta).
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double log_beta) { return temperature_nll(points, std::exp(log_beta)); };
  double a = std::log(kBetaMin), b = std::log(kBetaMax);
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a >= kLogBetaTolerance) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  double best_beta = std::exp((a + b) / 2.0);
  double best = temperature_nll(points, best_beta);
  // Monotone objectives (separable data) push the minimizer onto a bound.
  for (double edge : {kBetaMin, kBetaMax}) {
    const double v = temperature_nll(points, edge);
    if (v < best) {
      best = v;
      best_beta = edge;
    }
  }
  fit.beta = best_beta;
  fit.nll_at_beta = best;
  return fit;
}

std::vector<ConfidencePoint> apply_temperature(std::span<const ConfidencePoint> points, double beta) {
  std::vector<ConfidencePoint> out(points.begin(), points.end());
  for (auto& p : out) p.confidence = scale_confidence(p.confidence, beta);
  return out;
}

CrossFitResult cross_fit_metrics(std::span<const ConfidencePoint> points, std::size_t num_folds,
                                 std::uint64_t seed, std::size_t num_bins) {
  if (num_folds < 2) throw InvalidInput("cross-fitting needs at least 2 folds");
  if (points.empty()) throw NoDataError();
  validate_points(points);

  const auto plan = FoldPlan::make(points.size(), num_folds, seed);
  CrossFitResult result;
  double ece_sum = 0.0, bs_sum = 0.0;
  for (std::size_t f = 0; f < num_folds; ++f) {
    ++result.rotations_attempted;
    const auto fit_idx = plan.members(f);
    const std::size_t fold_id[] = {f};
    const auto eval_idx = plan.complement(fold_id);
    try {
      const auto fit_points = gather(points, fit_idx);
      auto fit = fit_temperature(fit_points);
      fit.fold_index = static_cast<int>(f);
      const auto scaled = apply_temperature(gather(points, eval_idx), fit.beta);
      ece_sum += ece(scaled, num_bins);
      bs_sum += brier(scaled);
      result.temperatures.push_back(fit);
    } catch (const Error& e) {
      result.warnings.push_back({rotation_name(f), e.what()});
    }
  }
  if (result.temperatures.empty()) throw Error(all_failed("every temperature rotation failed", result.warnings));
  const double k = static_cast<double>(result.temperatures.size());
  result.ece_t = ece_sum / k;
  result.bs_t = bs_sum / k;
  return result;
}

ExpressionMap fit_expression_probs(std::span<const ExpressionRecord> records,
                                   std::span<const std::string> expressions,
                                   const ExpressionMap& fallback,
                                   std::optional<double> min_usage_fraction) {
  if (records.empty()) throw NoDataError();
  for (const auto& e : expressions)
    if (!fallback.contains(e)) throw InvalidInput("fallback map has no value for '" + e + "'");

  std::vector<std::size_t> uses(expressions.size(), 0), hits(expressions.size(), 0);
  for (const auto& r : records) {
    const auto it = std::find(expressions.begin(), expressions.end(), r.expression);
    if (it == expressions.end()) throw InvalidInput("unknown expression '" + r.expression + "'");
    const auto i = static_cast<std::size_t>(it - expressions.begin());
    ++uses[i];
    hits[i] += r.correct ? 1 : 0;
  }

  const double n = static_cast<double>(records.size());
  const double fraction = min_usage_fraction.value_or(1.0 / n);
  // The small slack keeps 1/N * N from rounding up to 2.
  const auto threshold = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * n - 1e-9)));

  ExpressionMap fitted;
  for (std::size_t i = 0; i < expressions.size(); ++i) {
    const double p = uses[i] >= threshold
                         ? static_cast<double>(hits[i]) / static_cast<double>(uses[i])
                         : fallback.at(expressions[i]);
    fitted.set(expressions[i], p);
  }
  return fitted;
}

NestedLingResult nested_ling_opt_metrics(std::span<const ExpressionRecord> records,
                                         std::span<const std::string> expressions,
                                         const ExpressionMap& fallback,
                                         const NestedLingOptions& options) {
  const std::size_t k = options.num_folds;
  if (k < 3) throw InvalidInput("nested fitting needs at least 3 folds");
  if (records.empty()) throw NoDataError();

  const auto plan = FoldPlan::make(records.size(), k, options.seed);
  auto subset = [&](std::span<const std::size_t> idx) {
    std::vector<ExpressionRecord> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(records[i]);
    return out;
  };
  auto mapped = [&](const ExpressionMap& map, std::span<const std::size_t> idx) {
    std::vector<ConfidencePoint> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back({map.at(records[i].expression), records[i].correct});
    return out;
  };

  NestedLingResult result;
  std::vector<std::optional<ConfidencePoint>> held_out(records.size());

  std::size_t outer_ok = 0;
  double ece_sum = 0.0, auc_sum = 0.0;
  for (std::size_t e = 0; e < k; ++e) {
    ++result.outer_rotations;
    try {
      const std::size_t held[] = {e};
      const auto map = fit_expression_probs(subset(plan.complement(held)), expressions, fallback,
                                            options.min_usage_fraction);
      const auto eval_idx = plan.members(e);
      const auto pts = mapped(map, eval_idx);
      ece_sum += ece(pts, options.num_bins);
      auc_sum += selective_auc(pts);
      for (std::size_t j = 0; j < eval_idx.size(); ++j) held_out[eval_idx[j]] = pts[j];
      ++outer_ok;
    } catch (const Error& err) {
      result.warnings.push_back({rotation_name(e), err.what()});
    }
  }
  if (outer_ok == 0) throw Error(all_failed("every expression-fit rotation failed", result.warnings));
  result.ece = ece_sum / static_cast<double>(outer_ok);
  result.auc = auc_sum / static_cast<double>(outer_ok);
  for (const auto& p : held_out)
    if (p) result.held_out_points.push_back(*p);

  double ece_t_sum = 0.0, bs_t_sum = 0.0;
  std::size_t nested_ok = 0;
  for (std::size_t t = 0; t < k; ++t) {
    for (std::size_t e = 0; e < k; ++e) {
      if (t == e) continue;
      ++result.nested_rotations;
      try {
        const std::size_t held[] = {t, e};
        const auto map = fit_expression_probs(subset(plan.complement(held)), expressions, fallback,
                                              options.min_usage_fraction);
        auto fit = fit_temperature(mapped(map, plan.members(t)));
        fit.fold_index = static_cast<int>(t);
        const auto scaled = apply_temperature(mapped(map, plan.members(e)), fit.beta);
        ece_t_sum += ece(scaled, options.num_bins);
        bs_t_sum += brier(scaled);
        result.temperatures.push_back(fit);
        ++nested_ok;
      } catch (const Error& err) {
        result.warnings.push_back({rotation_name(t, e), err.what()});
      }
    }
  }
  if (nested_ok > 0) {
    result.ece_t = ece_t_sum / static_cast<double>(nested_ok);
    result.bs_t = bs_t_sum / static_cast<double>(nested_ok);
  }
  return result;
}

}  // namespace verbcal
