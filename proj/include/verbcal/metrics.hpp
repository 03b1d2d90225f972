#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace verbcal {

struct ConfidencePoint {
  double confidence = 0.0;
  bool correct = false;
};

// One equal-width confidence bin. The means are empty when count == 0.
struct ReliabilityBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  std::optional<double> mean_confidence;
  std::optional<double> mean_accuracy;
};

enum class BinError { kSquared, kAbsolute };

inline constexpr std::size_t kDefaultNumBins = 10;

// Throws InvalidConfidence naming the first point outside [0,1] or non-finite.
void validate_points(std::span<const ConfidencePoint> points);

// Index of the equal-width bin holding `confidence`. Edges belong to the
// higher bin; 1.0 belongs to the top bin.
std::size_t bin_index(double confidence, std::size_t num_bins);

std::vector<ReliabilityBin> bin_points(std::span<const ConfidencePoint> points,
                                       std::size_t num_bins = kDefaultNumBins);

// Count-weighted squared (default) or absolute gap between per-bin accuracy
// and confidence. Empty bins carry zero weight.
double ece(std::span<const ConfidencePoint> points, std::size_t num_bins = kDefaultNumBins,
           BinError mode = BinError::kSquared);

double brier(std::span<const ConfidencePoint> points);

// Mean selective accuracy over the N coverage levels k/N, with points ranked by
// descending confidence. Ties keep input order (stable sort).
double selective_auc(std::span<const ConfidencePoint> points);

// Shannon entropy (nats) of the empirical cluster distribution. Lower means
// more confident.
double entropy_score(std::span<const std::size_t> cluster_counts);

// One JSON object per bin, newline-terminated.
std::string reliability_jsonl(std::span<const ReliabilityBin> bins);

}  // namespace verbcal
