#pragma once

// Dense and sparse inner loops shared by the tensor engine, the selector and
// the annotation-graph builder.
//
// Every kernel exists twice: `serial::` is the plain reference kept for tests
// and benchmarks, `omp::` is the OpenMP-parallel version used at runtime. Each
// output element is produced by exactly one thread with a fixed summation
// order, so both versions are bit-identical for any thread count.

#include <cstddef>
#include <cstdint>
#include <span>

namespace gaga::kernels {

// Row-major matrix views.
template <typename T>
struct MatView {
  const T* data;
  std::size_t rows, cols;
  T at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

template <typename T>
struct MutMatView {
  T* data;
  std::size_t rows, cols;
};

// Compressed sparse rows; `values` may be empty, meaning all ones.
template <typename T>
struct CsrView {
  std::span<const std::int64_t> row_ptr;
  std::span<const std::int32_t> col_idx;
  std::span<const T> values;
  std::size_t rows, cols;
};

#define GAGA_KERNEL_DECLS                                                                      \
  /* c (+)= op(a) * op(b); op transposes when the flag is set. */                             \
  template <typename T>                                                                        \
  void gemm(MatView<T> a, bool trans_a, MatView<T> b, bool trans_b, MutMatView<T> c,          \
            bool accumulate);                                                                  \
  /* out (+)= s * x */                                                                         \
  template <typename T>                                                                        \
  void spmm(CsrView<T> s, MatView<T> x, MutMatView<T> out, bool accumulate);                   \
  /* out(i,j) = ||a_i - b_j||^2 */                                                             \
  template <typename T>                                                                        \
  void pairwise_sq_dist(MatView<T> a, MatView<T> b, MutMatView<T> out);                        \
  /* index of nearest b-row for every a-row; ties go to the lowest index */                   \
  template <typename T>                                                                        \
  void nearest_rows(MatView<T> a, MatView<T> b, std::span<std::int32_t> index,                 \
                    std::span<double> sq_dist);                                                \
  /* out(i,j) = cos(a_i, a_j); rows must be non-zero */                                        \
  template <typename T>                                                                        \
  void cosine_matrix(MatView<T> a, MutMatView<T> out);

namespace serial {
GAGA_KERNEL_DECLS
}  // namespace serial

namespace omp {
GAGA_KERNEL_DECLS
}  // namespace omp

#undef GAGA_KERNEL_DECLS

// Number of worker threads the omp:: kernels will use (1 without OpenMP).
int max_threads();
void set_threads(int n);

// Runtime entry points.
template <typename T>
void gemm(MatView<T> a, bool trans_a, MatView<T> b, bool trans_b, MutMatView<T> c, bool accumulate) {
  omp::gemm(a, trans_a, b, trans_b, c, accumulate);
}
template <typename T>
void spmm(CsrView<T> s, MatView<T> x, MutMatView<T> out, bool accumulate) {
  omp::spmm(s, x, out, accumulate);
}
template <typename T>
void pairwise_sq_dist(MatView<T> a, MatView<T> b, MutMatView<T> out) {
  omp::pairwise_sq_dist(a, b, out);
}
template <typename T>
void nearest_rows(MatView<T> a, MatView<T> b, std::span<std::int32_t> index, std::span<double> sq_dist) {
  omp::nearest_rows(a, b, index, sq_dist);
}
template <typename T>
void cosine_matrix(MatView<T> a, MutMatView<T> out) {
  omp::cosine_matrix(a, out);
}

}  // namespace gaga::kernels
