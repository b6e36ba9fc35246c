#include "gaga/align/gcn.hpp"

#include <cmath>

#include "gaga/common/error.hpp"
#include "gaga/tensor/ops.hpp"

namespace gaga::align {

using tensor::BasicTensor;
using tensor::SparseMatrix;
namespace ops = tensor::ops;

template <typename T>
SparseMatrix<T> normalized_adjacency(std::size_t n, std::span<const graph::Edge> edges) {
  std::vector<double> degree(n, 1.0);
  for (const auto& e : edges) {
    if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= n || static_cast<std::size_t>(e.v) >= n)
      throw ShapeError("adjacency edge outside " + std::to_string(n) + " nodes");
    if (e.u == e.v) continue;
    degree[e.u] += 1, degree[e.v] += 1;
  }
  std::vector<typename SparseMatrix<T>::Entry> entries;
  entries.reserve(n + 2 * edges.size());
  for (std::size_t i = 0; i < n; ++i)
    entries.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(i), static_cast<T>(1.0 / degree[i])});
  for (const auto& e : edges) {
    if (e.u == e.v) continue;
    const auto w = static_cast<T>(1.0 / std::sqrt(degree[e.u] * degree[e.v]));
    entries.push_back({e.u, e.v, w});
    entries.push_back({e.v, e.u, w});
  }
  return SparseMatrix<T>(n, n, std::move(entries));
}

template <typename T>
GraphBatch<T> make_batch(std::span<const Subgraph* const> parts) {
  if (parts.empty()) throw ContractError("empty graph batch");
  GraphBatch<T> b;
  b.graphs = parts.size();
  std::vector<graph::Edge> edges;
  std::vector<typename SparseMatrix<T>::Entry> pool;
  std::int32_t offset = 0;
  for (std::size_t g = 0; g < parts.size(); ++g) {
    const auto& s = *parts[g];
    if (s.nodes.empty()) throw ContractError("subgraph without nodes in batch");
    for (auto v : s.nodes) b.feature_rows.push_back(v);
    for (const auto& e : s.edges) edges.push_back({e.u + offset, e.v + offset});
    const T w = static_cast<T>(1.0 / static_cast<double>(s.nodes.size()));
    for (std::size_t i = 0; i < s.nodes.size(); ++i)
      pool.push_back({static_cast<std::int32_t>(g), offset + static_cast<std::int32_t>(i), w});
    offset += static_cast<std::int32_t>(s.nodes.size());
  }
  b.adjacency = normalized_adjacency<T>(static_cast<std::size_t>(offset), edges);
  b.pool = SparseMatrix<T>(parts.size(), static_cast<std::size_t>(offset), std::move(pool));
  return b;
}

std::vector<std::size_t> GcnShape::layer_dims() const {
  if (layers < 1) throw ContractError("GCN needs at least one layer");
  std::vector<std::size_t> dims{in_dim};
  for (std::size_t l = 1; l < layers; ++l) dims.push_back(hidden);
  dims.push_back(out_dim);
  return dims;
}

template <typename T>
BasicGcnEncoder<T>::BasicGcnEncoder(BasicTensor<T> adapter, std::vector<BasicTensor<T>> weights)
    : adapter_(std::move(adapter)), weights_(std::move(weights)) {
  if (!adapter_.defined() || adapter_.rank() != 2 || adapter_.rows() != adapter_.cols())
    throw ShapeError("GCN adapter must be square");
  if (weights_.empty()) throw ShapeError("GCN needs at least one layer");
  std::size_t d = adapter_.cols();
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (weights_[l].rank() != 2 || weights_[l].rows() != d)
      throw ShapeError("GCN layer " + std::to_string(l) + " has shape " + tensor::shape_str(weights_[l].shape()) +
                       " but receives width " + std::to_string(d));
    d = weights_[l].cols();
  }
}

namespace {

template <typename T>
BasicTensor<T> noisy_identity(std::size_t rows, std::size_t cols, double noise, Rng& rng) {
  std::vector<T> data(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      data[r * cols + c] = static_cast<T>((r == c ? 1.0 : 0.0) + noise * rng.normal());
  return BasicTensor<T>({rows, cols}, std::move(data), true);
}

}  // namespace

template <typename T>
BasicGcnEncoder<T> BasicGcnEncoder<T>::init(const GcnShape& shape, double noise, Rng& rng) {
  const auto dims = shape.layer_dims();
  auto adapter = noisy_identity<T>(shape.in_dim, shape.in_dim, noise, rng);
  std::vector<BasicTensor<T>> w;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) w.push_back(noisy_identity<T>(dims[l], dims[l + 1], noise, rng));
  return BasicGcnEncoder(std::move(adapter), std::move(w));
}

template <typename T>
BasicTensor<T> BasicGcnEncoder<T>::forward(tensor::BasicTape<T>& tape, const BasicTensor<T>& x,
                                           const SparseMatrix<T>& adjacency) const {
  if (x.rank() != 2 || x.cols() != in_dim())
    throw ShapeError("GCN input " + tensor::shape_str(x.shape()) + " does not match adapter width " +
                     std::to_string(in_dim()));
  if (adjacency.rows() != x.rows() || adjacency.cols() != x.rows())
    throw ShapeError("GCN adjacency does not match " + std::to_string(x.rows()) + " feature rows");
  auto h = ops::matmul(tape, x, adapter_);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = ops::spmm(tape, adjacency, ops::matmul(tape, h, weights_[l]));
    if (l + 1 < weights_.size()) h = ops::relu(tape, h);
  }
  return ops::l2_normalize_rows(tape, h);
}

template <typename T>
BasicTensor<T> BasicGcnEncoder<T>::encode_batch(tensor::BasicTape<T>& tape, const BasicTensor<T>& features,
                                                const GraphBatch<T>& batch) const {
  auto x = ops::gather_rows(tape, features, batch.feature_rows);
  auto h = forward(tape, x, batch.adjacency);
  return ops::l2_normalize_rows(tape, ops::spmm(tape, batch.pool, h));
}

template <typename T>
std::vector<BasicTensor<T>> BasicGcnEncoder<T>::parameters() const {
  std::vector<BasicTensor<T>> p{adapter_};
  p.insert(p.end(), weights_.begin(), weights_.end());
  return p;
}

template tensor::SparseMatrix<float> normalized_adjacency<float>(std::size_t, std::span<const graph::Edge>);
template tensor::SparseMatrix<double> normalized_adjacency<double>(std::size_t, std::span<const graph::Edge>);
template GraphBatch<float> make_batch<float>(std::span<const Subgraph* const>);
template GraphBatch<double> make_batch<double>(std::span<const Subgraph* const>);
template class BasicGcnEncoder<float>;
template class BasicGcnEncoder<double>;

}  // namespace gaga::align
