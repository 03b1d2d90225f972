#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "verbcal/expressions.hpp"
#include "verbcal/metrics.hpp"

namespace verbcal {

// Confidences are clamped to [eps, 1 - eps] before the NLL is evaluated.
inline constexpr double kNllClampEpsilon = 1e-4;
inline constexpr double kBetaMin = 0.01;
inline constexpr double kBetaMax = 100.0;
// Golden-section search stops when the bracket on ln(beta) is narrower than this.
inline constexpr double kLogBetaTolerance = 1e-5;

struct TemperatureFit {
  double beta = 1.0;
  double nll_at_beta = 0.0;
  int fold_index = -1;
  std::size_t fit_size = 0;
  // All clamped confidences equal 0.5; the objective is flat and beta = 1.
  bool unidentifiable = false;
};

// Every index belongs to exactly one fold; fold sizes differ by at most one.
struct FoldPlan {
  std::size_t num_folds = 0;
  std::vector<std::size_t> assignments;
  std::uint64_t seed = 0;

  // Seeded shuffle, then contiguous split.
  static FoldPlan make(std::size_t n, std::size_t num_folds, std::uint64_t seed);
  std::vector<std::size_t> members(std::size_t fold) const;
  std::vector<std::size_t> complement(std::span<const std::size_t> folds) const;
};

// p^beta / (p^beta + (1-p)^beta). 0 and 1 are fixed points.
double scale_confidence(double p, double beta);

// Sum over points of the binary NLL of scale_confidence(clamp(p), beta).
double temperature_nll(std::span<const ConfidencePoint> points, double beta);

// Minimizes temperature_nll over beta in [kBetaMin, kBetaMax] by golden-section
// search on ln(beta). Throws DegenerateLabels when only one label is present.
TemperatureFit fit_temperature(std::span<const ConfidencePoint> points);

std::vector<ConfidencePoint> apply_temperature(std::span<const ConfidencePoint> points, double beta);

struct RotationWarning {
  std::string rotation;
  std::string message;
};

struct CrossFitResult {
  double ece_t = 0.0;
  double bs_t = 0.0;
  std::vector<TemperatureFit> temperatures;  // successful rotations, fold order
  std::size_t rotations_attempted = 0;
  std::vector<RotationWarning> warnings;
};

// For each fold: fit beta on that fold, score the scaled confidences of the
// remaining folds. ECE-t and BS-t are averages over successful rotations.
CrossFitResult cross_fit_metrics(std::span<const ConfidencePoint> points, std::size_t num_folds,
                                 std::uint64_t seed, std::size_t num_bins = kDefaultNumBins);

struct ExpressionRecord {
  std::string expression;
  bool correct = false;
};

// Empirical accuracy per expression used on at least ceil(min_usage_fraction * N)
// records; other expressions keep the fallback probability. The default
// fraction 1/N makes any single use qualify.
ExpressionMap fit_expression_probs(std::span<const ExpressionRecord> records,
                                   std::span<const std::string> expressions,
                                   const ExpressionMap& fallback,
                                   std::optional<double> min_usage_fraction = std::nullopt);

struct NestedLingResult {
  double ece = 0.0;
  double auc = 0.0;
  std::optional<double> ece_t;
  std::optional<double> bs_t;
  std::size_t outer_rotations = 0;   // expression fit / evaluation splits
  std::size_t nested_rotations = 0;  // ordered (temperature fold, eval fold) pairs
  std::vector<TemperatureFit> temperatures;
  std::vector<RotationWarning> warnings;
  // Out-of-fold confidences from successful outer rotations, in record order.
  std::vector<ConfidencePoint> held_out_points;
};

struct NestedLingOptions {
  std::size_t num_folds = 5;
  std::uint64_t seed = 0;
  std::size_t num_bins = kDefaultNumBins;
  std::optional<double> min_usage_fraction;
};

// ECE/AUC: fit expression probabilities on k-1 folds, evaluate on the held-out
// fold, average over k rotations. ECE-t/BS-t: for every ordered pair
// (temperature fold, eval fold), fit expressions on the other k-2 folds, fit
// beta on the temperature fold, evaluate on the eval fold; average over the
// k(k-1) rotations.
NestedLingResult nested_ling_opt_metrics(std::span<const ExpressionRecord> records,
                                         std::span<const std::string> expressions,
                                         const ExpressionMap& fallback,
                                         const NestedLingOptions& options = {});

}  // namespace verbcal
