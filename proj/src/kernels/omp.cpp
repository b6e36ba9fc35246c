#include "detail.hpp"
#include "gaga/common/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gaga::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

namespace omp {

namespace {
// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWork = 1 << 15;
}  // namespace

template <typename T>
void gemm(MatView<T> a, bool trans_a, MatView<T> b, bool trans_b, MutMatView<T> c, bool accumulate) {
  const std::size_t inner = trans_a ? a.rows : a.cols;
  const auto rows = static_cast<std::ptrdiff_t>(c.rows);
  const bool par = c.rows * c.cols * inner >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < c.cols; ++j) {
      const T v = detail::gemm_element(a, trans_a, b, trans_b, static_cast<std::size_t>(i), j, inner);
      T& dst = c.data[static_cast<std::size_t>(i) * c.cols + j];
      dst = accumulate ? dst + v : v;
    }
  }
}

template <typename T>
void spmm(CsrView<T> s, MatView<T> x, MutMatView<T> out, bool accumulate) {
  const auto rows = static_cast<std::ptrdiff_t>(s.rows);
  const bool par = s.col_idx.size() * x.cols >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t r = 0; r < rows; ++r) detail::spmm_row(s, x, out, static_cast<std::size_t>(r), accumulate);
}

template <typename T>
void pairwise_sq_dist(MatView<T> a, MatView<T> b, MutMatView<T> out) {
  const auto rows = static_cast<std::ptrdiff_t>(a.rows);
  const bool par = a.rows * b.rows * a.cols >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j)
      out.data[static_cast<std::size_t>(i) * out.cols + j] =
          static_cast<T>(detail::sq_dist(a, static_cast<std::size_t>(i), b, j));
}

template <typename T>
void nearest_rows(MatView<T> a, MatView<T> b, std::span<std::int32_t> index, std::span<double> sq_dist) {
  if (b.rows == 0) throw DegenerateInputError("nearest_rows: empty reference set");
  const auto rows = static_cast<std::ptrdiff_t>(a.rows);
  const bool par = a.rows * b.rows * a.cols >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto u = static_cast<std::size_t>(i);
    detail::nearest_row(a, u, b, index[u], sq_dist[u]);
  }
}

template <typename T>
void cosine_matrix(MatView<T> a, MutMatView<T> out) {
  const auto rows = static_cast<std::ptrdiff_t>(a.rows);
  const bool par = a.rows * a.rows * a.cols >= kParallelWork;
#pragma omp parallel for schedule(dynamic, 16) if (par)
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < a.rows; ++j)
      out.data[static_cast<std::size_t>(i) * out.cols + j] =
          detail::cosine_element(a, static_cast<std::size_t>(i), j);
}

#define GAGA_INSTANTIATE(T)                                                                    \
  template void gemm<T>(MatView<T>, bool, MatView<T>, bool, MutMatView<T>, bool);              \
  template void spmm<T>(CsrView<T>, MatView<T>, MutMatView<T>, bool);                          \
  template void pairwise_sq_dist<T>(MatView<T>, MatView<T>, MutMatView<T>);                    \
  template void nearest_rows<T>(MatView<T>, MatView<T>, std::span<std::int32_t>, std::span<double>); \
  template void cosine_matrix<T>(MatView<T>, MutMatView<T>);

GAGA_INSTANTIATE(float)
GAGA_INSTANTIATE(double)

}  // namespace omp
}  // namespace gaga::kernels
