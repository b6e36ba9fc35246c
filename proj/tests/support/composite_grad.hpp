#pragma once

// Finite-difference checks of the composed training objectives: the
// alignment loss through the encoder, and the fine-tuning losses through the
// encoder, the fusion head and the task head. Both run in double precision.

#include <algorithm>
#include <cmath>
#include <vector>

#include "gaga/align/gcn.hpp"
#include "gaga/align/losses.hpp"
#include "gaga/common/rng.hpp"
#include "gaga/downstream/model.hpp"

namespace gaga::testing {

// The floor sits above central-difference round-off (about 1e-10 / h), so
// exactly-zero gradients behind inactive ReLUs compare as equal.
inline double rel_error(double numeric, double analytic) {
  return std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-5});
}

inline tensor::TensorD normal_rows(Rng& rng, std::size_t n, std::size_t d, bool grad = false) {
  std::vector<double> x(n * d);
  for (auto& v : x) v = rng.normal();
  return tensor::TensorD({n, d}, std::move(x), grad);
}

// One random instance of the mixed alignment loss on two pairs of small
// subgraphs; returns the worst relative error over every encoder parameter.
// The quantized rows follow the straight-through rule, so the numeric side
// holds the offset z - h_a fixed while h_a moves.
inline double combined_loss_grad_error(Rng& rng) {
  using namespace align;
  const std::size_t d = 3;
  auto enc = BasicGcnEncoder<double>::init(GcnShape{d, 4, 2, d}, 0.4, rng);
  auto feats = normal_rows(rng, 8, d);
  Subgraph t0{{0, 1, 2}, {{0, 1}, {1, 2}}}, t1{{3, 4}, {{0, 1}}}, a0{{5}, {}}, a1{{6, 7}, {{0, 1}}};
  std::vector<const Subgraph*> tp{&t0, &t1}, ap{&a0, &a1};
  const auto bt = make_batch<double>(tp), ba = make_batch<double>(ap);
  auto cb = normal_rows(rng, 3, d);
  const double alpha = 0.6;

  tensor::TapeD tape;
  const auto h_t = enc.encode_batch(tape, feats, bt);
  const auto h_a = enc.encode_batch(tape, feats, ba);
  std::vector<std::int32_t> assign;
  tape.backward(loss_combined(tape, h_t, h_a, cb, alpha, &assign));
  std::vector<double> offset(2 * d);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t c = 0; c < d; ++c) offset[i * d + c] = cb.at(assign[i], c) - h_a.at(i, c);
  auto value = [&] {
    tensor::TapeD t;
    const auto ht = enc.encode_batch(t, feats, bt), ha = enc.encode_batch(t, feats, ba);
    std::vector<double> z(2 * d);
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = ha.data()[k] + offset[k];
    const tensor::TensorD zt({2, d}, z);
    return alpha * contrast_loss(t, ht, zt).item() + (1 - alpha) * loss_eq1(t, ht, ha).item();
  };
  double worst = 0;
  for (auto p : enc.parameters()) {
    auto data = p.mutable_data();
    for (std::size_t k = 0; k < data.size(); ++k) {
      const double h = 1e-6, keep = data[k];
      data[k] = keep + h;
      const double up = value();
      data[k] = keep - h;
      const double down = value();
      data[k] = keep;
      worst = std::max(worst, rel_error((up - down) / (2 * h), p.grad()[k]));
    }
  }
  return worst;
}

// Taped gradient of `loss` against central differences over every model
// parameter entry; returns the worst relative error.
template <typename F>
double model_grad_error(downstream::BasicModel<double>& m, F loss) {
  for (auto& p : m.parameters()) p.zero_grad();
  tensor::TapeD tape;
  tape.backward(loss(tape));
  double worst = 0;
  for (auto p : m.parameters()) {
    auto data = p.mutable_data();
    for (std::size_t k = 0; k < data.size(); ++k) {
      const double h = 1e-6, keep = data[k];
      tensor::TapeD t;
      data[k] = keep + h;
      const double up = loss(t).item();
      data[k] = keep - h;
      const double down = loss(t).item();
      data[k] = keep;
      worst = std::max(worst, rel_error((up - down) / (2 * h), p.grad()[k]));
    }
  }
  return worst;
}

struct FinetuneGradErrors {
  double node = 0, link = 0;
};

// One random 6-node graph and model; checks the node cross-entropy and the
// link binary cross-entropy.
inline FinetuneGradErrors finetune_grad_errors(Rng& rng) {
  using namespace downstream;
  const std::size_t n = 6, d = 3;
  std::vector<graph::Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(0.4)) edges.push_back({static_cast<graph::NodeId>(i), static_cast<graph::NodeId>(j)});
  auto feats = normal_rows(rng, n, d);
  auto adj = align::normalized_adjacency<double>(n, edges);
  BasicModel<double> m;
  m.encoder = align::BasicGcnEncoder<double>::init(align::GcnShape{d, 4, 2, d}, 0.5, rng);
  m.fusion = BasicFusionHead<double>::init(d, 2, 0.5, rng);
  m.head = normal_rows(rng, 2, 3, true);
  m.codebook = normal_rows(rng, 4, d);
  FinetuneGradErrors out;
  const std::vector<std::int32_t> nodes{0, 2, 3, 5}, labels{0, 2, 0, 2};
  out.node = model_grad_error(m, [&](tensor::TapeD& t) { return node_loss(t, m, feats, adj, nodes, labels); });
  m.head = normal_rows(rng, 2, 1, true);
  const std::vector<graph::Edge> pos{{0, 1}, {2, 3}}, neg{{0, 5}, {1, 4}};
  out.link = model_grad_error(m, [&](tensor::TapeD& t) { return link_loss(t, m, feats, adj, pos, neg); });
  return out;
}

}  // namespace gaga::testing
