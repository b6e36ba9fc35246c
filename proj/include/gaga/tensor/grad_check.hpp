#pragma once

#include <functional>

#include "gaga/tensor/tape.hpp"
#include "gaga/tensor/tensor.hpp"

namespace gaga::tensor {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;  // at worst_index
  double numeric = 0.0;
};

template <typename T>
using ScalarFn = std::function<BasicTensor<T>(BasicTape<T>&, const BasicTensor<T>&)>;

// Compares the taped gradient of f at x with central differences
// (f(x+h) - f(x-h)) / 2h, component by component. The relative error of a
// component is |a - n| / max(|a|, |n|, abs_floor).
template <typename T>
GradCheckResult grad_check(const ScalarFn<T>& f, const BasicTensor<T>& x, double h, double abs_floor = 1e-6);

}  // namespace gaga::tensor
