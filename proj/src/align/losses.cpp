#include "gaga/align/losses.hpp"

#include "gaga/common/error.hpp"
#include "gaga/kernels/kernels.hpp"
#include "gaga/tensor/ops.hpp"

namespace gaga::align {

using tensor::BasicTensor;
namespace ops = tensor::ops;

template <typename T>
BasicTensor<T> contrast_loss(tensor::BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || a.shape() != b.shape())
    throw ShapeError("contrast loss shapes " + tensor::shape_str(a.shape()) + " vs " + tensor::shape_str(b.shape()));
  const auto n = a.rows();
  if (n < 2) throw ContractError("contrast loss needs at least 2 pairs, got " + std::to_string(n));
  std::vector<T> w(n * n, static_cast<T>(-1.0 / static_cast<double>(n - 1)));
  for (std::size_t i = 0; i < n; ++i) w[i * n + i] = 1;
  const BasicTensor<T> weights({n, n}, std::move(w));
  return ops::sum(tape, ops::mul(tape, ops::pairwise_sq_dist(tape, a, b), weights));
}

template <typename T>
VqMatch vq_map(std::span<const T> row, const BasicTensor<T>& codebook) {
  if (!codebook.defined() || codebook.numel() == 0) throw ContractError("vq_map on an empty codebook");
  if (row.size() != codebook.cols())
    throw ShapeError("vq_map row width " + std::to_string(row.size()) + " vs codebook width " +
                     std::to_string(codebook.cols()));
  VqMatch m;
  kernels::nearest_rows(kernels::MatView<T>{row.data(), 1, row.size()}, codebook.view(), std::span(&m.index, 1),
                        std::span(&m.sq_dist, 1));
  return m;
}

template <typename T>
std::vector<std::int32_t> vq_assign(const BasicTensor<T>& rows, const BasicTensor<T>& codebook) {
  if (!codebook.defined() || codebook.numel() == 0) throw ContractError("vq_map on an empty codebook");
  if (rows.cols() != codebook.cols())
    throw ShapeError("vq_map row width " + std::to_string(rows.cols()) + " vs codebook width " +
                     std::to_string(codebook.cols()));
  std::vector<std::int32_t> idx(rows.rows());
  std::vector<double> dist(rows.rows());
  kernels::nearest_rows(rows.view(), codebook.view(), idx, dist);
  return idx;
}

template <typename T>
BasicTensor<T> loss_combined(tensor::BasicTape<T>& tape, const BasicTensor<T>& h_t, const BasicTensor<T>& h_a,
                             const BasicTensor<T>& codebook, double alpha, std::vector<std::int32_t>* assignments,
                             CombinedLossParts* parts) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  auto idx = vq_assign(h_a, codebook);
  const auto z = ops::straight_through(tape, h_a, ops::gather_rows(tape, codebook.detach(), idx));
  const auto proto = contrast_loss(tape, h_t, z);
  const auto pairs = loss_eq1(tape, h_t, h_a);
  if (parts) *parts = {static_cast<double>(proto.item()), static_cast<double>(pairs.item())};
  if (assignments) *assignments = std::move(idx);
  return ops::add(tape, ops::scale(tape, proto, alpha), ops::scale(tape, pairs, 1.0 - alpha));
}

#define GAGA_INSTANTIATE(T)                                                                                  \
  template BasicTensor<T> contrast_loss<T>(tensor::BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&); \
  template VqMatch vq_map<T>(std::span<const T>, const BasicTensor<T>&);                                     \
  template std::vector<std::int32_t> vq_assign<T>(const BasicTensor<T>&, const BasicTensor<T>&);            \
  template BasicTensor<T> loss_combined<T>(tensor::BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&, \
                                           const BasicTensor<T>&, double, std::vector<std::int32_t>*,        \
                                           CombinedLossParts*);

GAGA_INSTANTIATE(float)
GAGA_INSTANTIATE(double)

}  // namespace gaga::align
