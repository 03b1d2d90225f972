#include "verbcal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "verbcal/error.hpp"

namespace verbcal {

void validate_points(std::span<const ConfidencePoint> points) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double c = points[i].confidence;
    if (!std::isfinite(c) || c < 0.0 || c > 1.0) throw InvalidConfidence(i, c);
  }
}

std::size_t bin_index(double confidence, std::size_t num_bins) {
  const double n = static_cast<double>(num_bins);
  auto idx = static_cast<std::size_t>(std::floor(confidence * n));
  if (idx >= num_bins) return num_bins - 1;
  // floor(c * n) can land one off the edge k / n after rounding.
  if (idx + 1 < num_bins && confidence >= static_cast<double>(idx + 1) / n) ++idx;
  if (idx > 0 && confidence < static_cast<double>(idx) / n) --idx;
  return idx;
}

std::vector<ReliabilityBin> bin_points(std::span<const ConfidencePoint> points,
                                       std::size_t num_bins) {
  if (num_bins == 0) throw InvalidInput("num_bins must be at least 1");
  if (points.empty()) throw NoDataError();
  validate_points(points);

  std::vector<double> conf_sum(num_bins, 0.0);
  std::vector<std::size_t> correct(num_bins, 0);
  std::vector<ReliabilityBin> bins(num_bins);
  for (const auto& p : points) {
    const std::size_t b = bin_index(p.confidence, num_bins);
    ++bins[b].count;
    conf_sum[b] += p.confidence;
    correct[b] += p.correct ? 1 : 0;
  }
  const double n = static_cast<double>(num_bins);
  for (std::size_t b = 0; b < num_bins; ++b) {
    bins[b].lower = static_cast<double>(b) / n;
    bins[b].upper = static_cast<double>(b + 1) / n;
    if (bins[b].count > 0) {
      const double c = static_cast<double>(bins[b].count);
      bins[b].mean_confidence = conf_sum[b] / c;
      bins[b].mean_accuracy = static_cast<double>(correct[b]) / c;
    }
  }
  return bins;
}

double ece(std::span<const ConfidencePoint> points, std::size_t num_bins, BinError mode) {
  const auto bins = bin_points(points, num_bins);
  const double total = static_cast<double>(points.size());
  double err = 0.0;
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    const double gap = *b.mean_accuracy - *b.mean_confidence;
    const double e = mode == BinError::kSquared ? gap * gap : std::abs(gap);
    err += static_cast<double>(b.count) / total * e;
  }
  return err;
}

double brier(std::span<const ConfidencePoint> points) {
  if (points.empty()) throw NoDataError();
  validate_points(points);
  double sum = 0.0;
  for (const auto& p : points) {
    const double d = p.confidence - (p.correct ? 1.0 : 0.0);
    sum += d * d;
  }
  return sum / static_cast<double>(points.size());
}

double selective_auc(std::span<const ConfidencePoint> points) {
  if (points.empty()) throw NoDataError();
  validate_points(points);
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return points[a].confidence > points[b].confidence;
  });
  double area = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    hits += points[order[k]].correct ? 1 : 0;
    area += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return area / static_cast<double>(points.size());
}

double entropy_score(std::span<const std::size_t> cluster_counts) {
  const std::size_t n = std::accumulate(cluster_counts.begin(), cluster_counts.end(), std::size_t{0});
  if (n == 0) throw NoDataError("no samples");
  double h = 0.0;
  for (std::size_t c : cluster_counts) {
    if (c == 0) continue;
    const double q = static_cast<double>(c) / static_cast<double>(n);
    h -= q * std::log(q);
  }
  return h;
}

std::string reliability_jsonl(std::span<const ReliabilityBin> bins) {
  std::string out;
  for (const auto& b : bins) {
    nlohmann::ordered_json j;
    j["lower"] = b.lower;
    j["upper"] = b.upper;
    j["count"] = b.count;
    j["mean_confidence"] = b.mean_confidence ? nlohmann::ordered_json(*b.mean_confidence) : nlohmann::ordered_json(nullptr);
    j["mean_accuracy"] = b.mean_accuracy ? nlohmann::ordered_json(*b.mean_accuracy) : nlohmann::ordered_json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace verbcal
