#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gaga/common/rng.hpp"
#include "gaga/tensor/tensor.hpp"

namespace gaga::align {

inline constexpr int kDefaultReseedAfter = 50;

// Prototype matrix learned by exponential moving averages of the annotation
// embeddings assigned to each row.
struct PrototypeCodebook {
  tensor::Tensor z;               // k_p x d
  std::vector<double> counts;     // EMA of assignment counts, start at 1
  std::vector<std::int32_t> idle; // consecutive updates without assignments
  double gamma = 0.99;

  std::size_t size() const { return z.rows(); }
  std::size_t dim() const { return z.cols(); }
  // Throws ContractError when a row is non-finite, a count is negative or the
  // bookkeeping vectors disagree with z.
  void validate() const;
};

PrototypeCodebook make_codebook(tensor::Tensor z, double gamma);

// k-means over `pool` rows with k = min(kp, rows); remaining prototypes are
// copies of the centers (cycled) perturbed by N(0, noise^2).
PrototypeCodebook init_codebook(const tensor::Tensor& pool, std::size_t kp, double gamma, std::uint64_t seed,
                                double noise = 0.01);

// Gaussian rows, L2-normalized.
PrototypeCodebook random_codebook(std::size_t kp, std::size_t dim, double gamma, std::uint64_t seed);

// One EMA step from `batch` rows assigned by `assignments`. Prototypes with
// no mass keep their row; a prototype idle for more than `reseed_after`
// consecutive steps is moved to a random batch row with count 1.
void update_codebook(PrototypeCodebook& cb, const tensor::Tensor& batch, std::span<const std::int32_t> assignments,
                     Rng& rng, int reseed_after = kDefaultReseedAfter);

}  // namespace gaga::align
