#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gaga::downstream {

// 1 + number of negatives scoring at least as high as the positive, so a
// tie ranks the positive after the equal-scored negatives.
std::size_t pessimistic_rank(double positive, std::span<const double> negatives);

// Mean of 1/rank with ranks above 10 contributing 0. Throws ContractError on
// an empty list or a rank below 1.
double mrr_at_10(std::span<const std::size_t> ranks);

// Fraction of (positive, negative) pairs ordered correctly, ties counted
// one half. Throws ContractError when either side is empty.
double auc(std::span<const double> positives, std::span<const double> negatives);

// Index of the largest value, ties to the lowest index.
std::int32_t argmax(std::span<const double> values);

// Share of positions where prediction equals label.
double accuracy(std::span<const std::int32_t> predicted, std::span<const std::int32_t> labels);

}  // namespace gaga::downstream
