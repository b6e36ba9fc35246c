#pragma once

#include <vector>

#include "gaga/common/rng.hpp"
#include "gaga/tensor/tensor.hpp"

namespace gaga::testing {

template <typename T>
tensor::BasicTensor<T> random_tensor(Rng& rng, tensor::Shape shape, double scale = 1.0, bool requires_grad = false) {
  std::vector<T> data(tensor::numel_of(shape));
  for (auto& v : data) v = static_cast<T>(scale * rng.normal());
  return tensor::BasicTensor<T>(std::move(shape), std::move(data), requires_grad);
}

// Values bounded away from zero, for ops with a kink at the origin.
template <typename T>
tensor::BasicTensor<T> random_away_from_zero(Rng& rng, tensor::Shape shape, double margin) {
  std::vector<T> data(tensor::numel_of(shape));
  for (auto& v : data) {
    double x;
    do {
      x = rng.normal();
    } while (std::abs(x) < margin);
    v = static_cast<T>(x);
  }
  return tensor::BasicTensor<T>(std::move(shape), std::move(data));
}

inline std::size_t dim(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

}  // namespace gaga::testing
