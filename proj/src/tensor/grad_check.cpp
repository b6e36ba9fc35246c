#include "gaga/tensor/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace gaga::tensor {

template <typename T>
GradCheckResult grad_check(const ScalarFn<T>& f, const BasicTensor<T>& x, double h, double abs_floor) {
  auto probe = x.detach();
  probe.set_requires_grad(true);
  std::vector<double> analytic;
  {
    BasicTape<T> tape;
    auto loss = f(tape, probe);
    tape.backward(loss);
    analytic.assign(probe.grad().begin(), probe.grad().end());
  }

  GradCheckResult result;
  auto data = probe.mutable_data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const T saved = data[i];
    data[i] = static_cast<T>(saved + h);
    BasicTape<T> plus_tape;
    const double plus = f(plus_tape, probe).item();
    data[i] = static_cast<T>(saved - h);
    BasicTape<T> minus_tape;
    const double minus = f(minus_tape, probe).item();
    data[i] = saved;
    const double numeric = (plus - minus) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), abs_floor});
    const double err = std::abs(analytic[i] - numeric) / denom;
    if (err > result.max_rel_error || i == 0) {
      result.max_rel_error = std::max(result.max_rel_error, err);
      result.worst_index = i;
      result.analytic = analytic[i];
      result.numeric = numeric;
    }
  }
  return result;
}

template GradCheckResult grad_check<float>(const ScalarFn<float>&, const BasicTensor<float>&, double, double);
template GradCheckResult grad_check<double>(const ScalarFn<double>&, const BasicTensor<double>&, double, double);

}  // namespace gaga::tensor
