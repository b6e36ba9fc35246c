#include "gaga/tensor/adam.hpp"

#include <cmath>

#include "gaga/common/error.hpp"

namespace gaga::tensor {

template <typename T>
void adam_step(std::vector<BasicTensor<T>>& params, AdamState<T>& state) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), T{0});
      state.v.emplace_back(p.numel(), T{0});
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: state tracks a different parameter list");
  state.t += 1;
  const auto& o = state.options;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != p.numel() || v.size() != p.numel())
      throw ShapeError("adam_step: moment shape mismatch for parameter " + std::to_string(k) + " " +
                       shape_str(p.shape()));
    if (!p.has_grad()) continue;
    auto data = p.mutable_data();
    const auto g = p.grad();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double gi = g[i];
      const double mi = o.beta1 * m[i] + (1.0 - o.beta1) * gi;
      const double vi = o.beta2 * v[i] + (1.0 - o.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      data[i] = static_cast<T>(data[i] - o.lr * mhat / (std::sqrt(vhat) + o.eps));
    }
  }
}

template <typename T>
BasicAdam<T>::BasicAdam(std::vector<BasicTensor<T>> params, AdamOptions options) : params_(std::move(params)) {
  state_.options = options;
  for (const auto& p : params_) {
    state_.m.emplace_back(p.numel(), T{0});
    state_.v.emplace_back(p.numel(), T{0});
  }
}

template <typename T>
void BasicAdam<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template void adam_step<float>(std::vector<BasicTensor<float>>&, AdamState<float>&);
template void adam_step<double>(std::vector<BasicTensor<double>>&, AdamState<double>&);
template class BasicAdam<float>;
template class BasicAdam<double>;

}  // namespace gaga::tensor
