#pragma once

#include <cstdint>
#include <vector>

#include "gaga/tensor/tensor.hpp"

namespace gaga::tensor {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First and second moments per parameter plus the shared step counter.
template <typename T>
struct AdamState {
  AdamOptions options;
  std::vector<std::vector<T>> m, v;
  std::int64_t t = 0;
};

// One bias-corrected Adam update from the parameters' gradient buffers. The
// step counter increments before the update. Parameters without a gradient
// buffer are treated as having zero gradient.
template <typename T>
void adam_step(std::vector<BasicTensor<T>>& params, AdamState<T>& state);

template <typename T>
class BasicAdam {
 public:
  BasicAdam(std::vector<BasicTensor<T>> params, AdamOptions options);

  void step() { adam_step(params_, state_); }
  void zero_grad();

  const AdamState<T>& state() const noexcept { return state_; }
  AdamState<T>& state() noexcept { return state_; }
  const std::vector<BasicTensor<T>>& params() const noexcept { return params_; }

 private:
  std::vector<BasicTensor<T>> params_;
  AdamState<T> state_;
};

using Adam = BasicAdam<float>;

extern template class BasicAdam<float>;
extern template class BasicAdam<double>;

}  // namespace gaga::tensor
