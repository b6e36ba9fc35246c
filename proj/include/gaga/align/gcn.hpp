#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gaga/align/subgraph.hpp"
#include "gaga/common/rng.hpp"
#include "gaga/graph/csr_graph.hpp"
#include "gaga/tensor/sparse.hpp"
#include "gaga/tensor/tape.hpp"
#include "gaga/tensor/tensor.hpp"

namespace gaga::align {

// D^-1/2 (A + I) D^-1/2 for an undirected edge list over n nodes.
template <typename T>
tensor::SparseMatrix<T> normalized_adjacency(std::size_t n, std::span<const graph::Edge> edges);

// Disjoint union of several subgraphs: one block-diagonal normalized
// adjacency, the feature row of every stacked node, and a mean-pool matrix
// with one row per subgraph.
template <typename T>
struct GraphBatch {
  tensor::SparseMatrix<T> adjacency;
  std::vector<std::int32_t> feature_rows;
  tensor::SparseMatrix<T> pool;
  std::size_t graphs = 0;
};

template <typename T>
GraphBatch<T> make_batch(std::span<const Subgraph* const> parts);

struct GcnShape {
  std::size_t in_dim = 64;
  std::size_t hidden = 64;
  std::size_t layers = 4;
  std::size_t out_dim = 64;

  // in -> hidden ... hidden -> out
  std::vector<std::size_t> layer_dims() const;
};

// Trainable adapter over frozen features followed by a stack of graph
// convolutions. Output rows are L2-normalized.
template <typename T>
class BasicGcnEncoder {
 public:
  BasicGcnEncoder() = default;
  BasicGcnEncoder(tensor::BasicTensor<T> adapter, std::vector<tensor::BasicTensor<T>> weights);

  // Adapter and every layer start at the (rectangular) identity plus
  // N(0, noise^2) entries.
  static BasicGcnEncoder init(const GcnShape& shape, double noise, Rng& rng);

  // Node embeddings for features `x` (rows aligned with `adjacency`).
  tensor::BasicTensor<T> forward(tensor::BasicTape<T>& tape, const tensor::BasicTensor<T>& x,
                                 const tensor::SparseMatrix<T>& adjacency) const;

  // Mean-pools each subgraph of the batch and L2-normalizes the result.
  // `features` is the full feature table; the batch picks its rows.
  tensor::BasicTensor<T> encode_batch(tensor::BasicTape<T>& tape, const tensor::BasicTensor<T>& features,
                                      const GraphBatch<T>& batch) const;

  std::vector<tensor::BasicTensor<T>> parameters() const;
  const tensor::BasicTensor<T>& adapter() const noexcept { return adapter_; }
  const std::vector<tensor::BasicTensor<T>>& weights() const noexcept { return weights_; }
  std::size_t in_dim() const { return adapter_.rows(); }
  std::size_t out_dim() const { return weights_.back().cols(); }

  // Deep copy, optionally into another precision.
  template <typename To>
  BasicGcnEncoder<To> cast(bool requires_grad = true) const {
    std::vector<tensor::BasicTensor<To>> w;
    for (const auto& t : weights_) w.push_back(tensor::cast<To>(t, requires_grad));
    return BasicGcnEncoder<To>(tensor::cast<To>(adapter_, requires_grad), std::move(w));
  }

 private:
  tensor::BasicTensor<T> adapter_;
  std::vector<tensor::BasicTensor<T>> weights_;
};

using GcnEncoder = BasicGcnEncoder<float>;

extern template class BasicGcnEncoder<float>;
extern template class BasicGcnEncoder<double>;

}  // namespace gaga::align
