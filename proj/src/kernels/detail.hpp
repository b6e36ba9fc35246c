#pragma once

// Per-element bodies shared by the serial and OpenMP kernels. Both loop nests
// call these, which is what makes their results bit-identical.

#include <cmath>
#include <cstddef>

#include "gaga/kernels/kernels.hpp"

namespace gaga::kernels::detail {

template <typename T>
inline T gemm_element(const MatView<T>& a, bool ta, const MatView<T>& b, bool tb, std::size_t i,
                      std::size_t j, std::size_t inner) {
  double acc = 0.0;
  for (std::size_t p = 0; p < inner; ++p) {
    const double x = ta ? a.at(p, i) : a.at(i, p);
    const double y = tb ? b.at(j, p) : b.at(p, j);
    acc += x * y;
  }
  return static_cast<T>(acc);
}

template <typename T>
inline void spmm_row(const CsrView<T>& s, const MatView<T>& x, MutMatView<T>& out, std::size_t r,
                     bool accumulate) {
  const std::size_t d = x.cols;
  T* dst = out.data + r * d;
  for (std::size_t c = 0; c < d; ++c) {
    double acc = accumulate ? static_cast<double>(dst[c]) : 0.0;
    for (auto k = s.row_ptr[r]; k < s.row_ptr[r + 1]; ++k) {
      const double w = s.values.empty() ? 1.0 : static_cast<double>(s.values[k]);
      acc += w * x.at(static_cast<std::size_t>(s.col_idx[k]), c);
    }
    dst[c] = static_cast<T>(acc);
  }
}

template <typename T>
inline double sq_dist(const MatView<T>& a, std::size_t i, const MatView<T>& b, std::size_t j) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.cols; ++c) {
    const double diff = static_cast<double>(a.at(i, c)) - static_cast<double>(b.at(j, c));
    acc += diff * diff;
  }
  return acc;
}

template <typename T>
inline void nearest_row(const MatView<T>& a, std::size_t i, const MatView<T>& b, std::int32_t& index,
                        double& best) {
  index = 0;
  best = sq_dist(a, i, b, 0);
  for (std::size_t j = 1; j < b.rows; ++j) {
    const double d = sq_dist(a, i, b, j);
    if (d < best) {
      best = d;
      index = static_cast<std::int32_t>(j);
    }
  }
}

template <typename T>
inline T cosine_element(const MatView<T>& a, std::size_t i, std::size_t j) {
  double dot = 0.0, ni = 0.0, nj = 0.0;
  for (std::size_t c = 0; c < a.cols; ++c) {
    const double x = a.at(i, c), y = a.at(j, c);
    dot += x * y;
    ni += x * x;
    nj += y * y;
  }
  return static_cast<T>(dot / (std::sqrt(ni) * std::sqrt(nj)));
}

}  // namespace gaga::kernels::detail
