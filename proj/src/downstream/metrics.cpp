#include "gaga/downstream/metrics.hpp"

#include <algorithm>
#include <string>

#include "gaga/common/error.hpp"

namespace gaga::downstream {

std::size_t pessimistic_rank(double positive, std::span<const double> negatives) {
  std::size_t above = 0;
  for (double s : negatives) above += s >= positive;
  return 1 + above;
}

double mrr_at_10(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw ContractError("mrr_at_10 of an empty rank list");
  double total = 0;
  for (auto r : ranks) {
    if (r < 1) throw ContractError("rank must be >= 1, got " + std::to_string(r));
    if (r <= 10) total += 1.0 / static_cast<double>(r);
  }
  return total / static_cast<double>(ranks.size());
}

double auc(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) throw ContractError("auc needs positive and negative scores");
  std::vector<double> neg(negatives.begin(), negatives.end());
  std::sort(neg.begin(), neg.end());
  // Count pairs in integer halves so the sum is exact and order-independent.
  std::uint64_t halves = 0;
  for (double p : positives) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(lo, neg.end(), p);
    halves += 2 * static_cast<std::uint64_t>(lo - neg.begin()) + static_cast<std::uint64_t>(hi - lo);
  }
  return static_cast<double>(halves) / (2.0 * static_cast<double>(positives.size()) *
                                        static_cast<double>(negatives.size()));
}

std::int32_t argmax(std::span<const double> values) {
  if (values.empty()) throw ContractError("argmax of an empty row");
  return static_cast<std::int32_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

double accuracy(std::span<const std::int32_t> predicted, std::span<const std::int32_t> labels) {
  if (predicted.size() != labels.size()) throw ShapeError("accuracy: prediction and label counts differ");
  if (labels.empty()) throw ContractError("accuracy over an empty set");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += predicted[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

}  // namespace gaga::downstream
