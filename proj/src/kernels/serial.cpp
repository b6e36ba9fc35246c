#include "detail.hpp"
#include "gaga/common/error.hpp"

namespace gaga::kernels::serial {

template <typename T>
void gemm(MatView<T> a, bool trans_a, MatView<T> b, bool trans_b, MutMatView<T> c, bool accumulate) {
  const std::size_t inner = trans_a ? a.rows : a.cols;
  for (std::size_t i = 0; i < c.rows; ++i) {
    for (std::size_t j = 0; j < c.cols; ++j) {
      const T v = detail::gemm_element(a, trans_a, b, trans_b, i, j, inner);
      T& dst = c.data[i * c.cols + j];
      dst = accumulate ? dst + v : v;
    }
  }
}

template <typename T>
void spmm(CsrView<T> s, MatView<T> x, MutMatView<T> out, bool accumulate) {
  for (std::size_t r = 0; r < s.rows; ++r) detail::spmm_row(s, x, out, r, accumulate);
}

template <typename T>
void pairwise_sq_dist(MatView<T> a, MatView<T> b, MutMatView<T> out) {
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j)
      out.data[i * out.cols + j] = static_cast<T>(detail::sq_dist(a, i, b, j));
}

template <typename T>
void nearest_rows(MatView<T> a, MatView<T> b, std::span<std::int32_t> index, std::span<double> sq_dist) {
  if (b.rows == 0) throw DegenerateInputError("nearest_rows: empty reference set");
  for (std::size_t i = 0; i < a.rows; ++i) detail::nearest_row(a, i, b, index[i], sq_dist[i]);
}

template <typename T>
void cosine_matrix(MatView<T> a, MutMatView<T> out) {
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.rows; ++j) out.data[i * out.cols + j] = detail::cosine_element(a, i, j);
}

#define GAGA_INSTANTIATE(T)                                                                    \
  template void gemm<T>(MatView<T>, bool, MatView<T>, bool, MutMatView<T>, bool);              \
  template void spmm<T>(CsrView<T>, MatView<T>, MutMatView<T>, bool);                          \
  template void pairwise_sq_dist<T>(MatView<T>, MatView<T>, MutMatView<T>);                    \
  template void nearest_rows<T>(MatView<T>, MatView<T>, std::span<std::int32_t>, std::span<double>); \
  template void cosine_matrix<T>(MatView<T>, MutMatView<T>);

GAGA_INSTANTIATE(float)
GAGA_INSTANTIATE(double)

}  // namespace gaga::kernels::serial
