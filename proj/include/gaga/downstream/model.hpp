#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gaga/align/gcn.hpp"
#include "gaga/common/rng.hpp"
#include "gaga/graph/csr_graph.hpp"
#include "gaga/tensor/checkpoint.hpp"
#include "gaga/tensor/tape.hpp"
#include "gaga/tensor/tensor.hpp"

namespace gaga::downstream {

// Query, key and value projections for attention from node embeddings over
// the prototype rows.
template <typename T>
struct BasicFusionHead {
  tensor::BasicTensor<T> wq, wk, wv;  // d x d_k each
  bool residual = false;              // add h to the output (requires d_k == d)

  std::size_t dk() const { return wq.cols(); }
  // Rectangular identity plus N(0, noise^2) entries; W^Q's identity part is
  // multiplied by `query_scale`, which sets the initial attention sharpness.
  static BasicFusionHead init(std::size_t d, std::size_t dk, double noise, Rng& rng, double query_scale = 1.0);
};

// softmax(h Wq (Z Wk)^T / sqrt(d_k)) Z Wv, plus h when `residual` is set.
// The codebook `z` is treated as a constant.
template <typename T>
tensor::BasicTensor<T> cross_attention(tensor::BasicTape<T>& tape, const tensor::BasicTensor<T>& h,
                                       const tensor::BasicTensor<T>& z, const BasicFusionHead<T>& fusion);

// Logits (h'_u * h'_v) . w for each edge, as an m x 1 tensor.
template <typename T>
tensor::BasicTensor<T> edge_logits(tensor::BasicTape<T>& tape, const tensor::BasicTensor<T>& h_prime,
                                   const tensor::BasicTensor<T>& w, std::span<const graph::Edge> edges);

// Softmax over one row of class logits.
std::vector<double> classify(std::span<const double> logits);
// sigmoid((a * b) . w)
double link_score(std::span<const double> a, std::span<const double> b, std::span<const double> w);

// Encoder, fusion and task head over a frozen codebook. The head is d_k x C
// for node classification and d_k x 1 for link prediction.
template <typename T>
struct BasicModel {
  align::BasicGcnEncoder<T> encoder;
  BasicFusionHead<T> fusion;
  tensor::BasicTensor<T> head;
  tensor::BasicTensor<T> codebook;

  std::vector<tensor::BasicTensor<T>> parameters() const;
  // h' for every node of the graph `adjacency` describes.
  tensor::BasicTensor<T> represent(tensor::BasicTape<T>& tape, const tensor::BasicTensor<T>& features,
                                   const tensor::SparseMatrix<T>& adjacency) const;

  template <typename To>
  BasicModel<To> cast(bool requires_grad = true) const {
    BasicModel<To> m;
    m.encoder = encoder.template cast<To>(requires_grad);
    m.fusion = {tensor::cast<To>(fusion.wq, requires_grad), tensor::cast<To>(fusion.wk, requires_grad),
                tensor::cast<To>(fusion.wv, requires_grad), fusion.residual};
    m.head = tensor::cast<To>(head, requires_grad);
    m.codebook = tensor::cast<To>(codebook, false);
    return m;
  }
};

using FusionHead = BasicFusionHead<float>;
using Model = BasicModel<float>;

struct ModelInit {
  std::size_t dk = 0;  // 0 means the encoder width
  bool residual = false;
  double noise = 0.01;
  double query_scale = 1.0;
};

// A classification head starts with N(0, 1/d_k) entries. A link head (one
// output) starts as the all-ones vector so the initial score is the dot
// product h'_a . h'_b.
Model make_model(const align::GcnEncoder& encoder, const tensor::Tensor& codebook, std::size_t outputs,
                 const ModelInit& init, std::uint64_t seed);

// Mean cross-entropy of the model's class logits on `nodes`.
template <typename T>
tensor::BasicTensor<T> node_loss(tensor::BasicTape<T>& tape, const BasicModel<T>& m,
                                 const tensor::BasicTensor<T>& features, const tensor::SparseMatrix<T>& adjacency,
                                 std::span<const std::int32_t> nodes, std::span<const std::int32_t> labels);

// Mean binary cross-entropy with `positives` as 1 and `negatives` as 0.
template <typename T>
tensor::BasicTensor<T> link_loss(tensor::BasicTape<T>& tape, const BasicModel<T>& m,
                                 const tensor::BasicTensor<T>& features, const tensor::SparseMatrix<T>& adjacency,
                                 std::span<const graph::Edge> positives, std::span<const graph::Edge> negatives);

tensor::Checkpoint model_checkpoint(const Model& m);
Model model_from_checkpoint(const tensor::Checkpoint& ck);

extern template struct BasicFusionHead<float>;
extern template struct BasicFusionHead<double>;
extern template struct BasicModel<float>;
extern template struct BasicModel<double>;

}  // namespace gaga::downstream
