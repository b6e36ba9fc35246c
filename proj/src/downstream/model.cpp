#include "gaga/downstream/model.hpp"

#include <cmath>

#include "gaga/common/error.hpp"
#include "gaga/tensor/ops.hpp"

namespace gaga::downstream {

using tensor::BasicTensor;
namespace ops = tensor::ops;

template <typename T>
BasicFusionHead<T> BasicFusionHead<T>::init(std::size_t d, std::size_t dk, double noise, Rng& rng,
                                            double query_scale) {
  auto make = [&](double diag) {
    std::vector<T> w(d * dk);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < dk; ++c) w[r * dk + c] = static_cast<T>((r == c ? diag : 0.0) + noise * rng.normal());
    return BasicTensor<T>({d, dk}, std::move(w), true);
  };
  BasicFusionHead f;
  f.wq = make(query_scale);
  f.wk = make(1.0);
  f.wv = make(1.0);
  return f;
}

template <typename T>
BasicTensor<T> cross_attention(tensor::BasicTape<T>& tape, const BasicTensor<T>& h, const BasicTensor<T>& z,
                               const BasicFusionHead<T>& fusion) {
  if (!z.defined() || z.rank() != 2 || z.rows() == 0) throw ContractError("cross attention needs a non-empty codebook");
  if (h.rank() != 2 || h.cols() != fusion.wq.rows())
    throw ShapeError("cross attention query width " + tensor::shape_str(h.shape()) + " vs W^Q " +
                     tensor::shape_str(fusion.wq.shape()));
  if (z.cols() != fusion.wk.rows() || z.cols() != fusion.wv.rows())
    throw ShapeError("codebook width " + std::to_string(z.cols()) + " does not match W^K / W^V");
  if (fusion.wk.cols() != fusion.dk()) throw ShapeError("W^Q and W^K disagree on d_k");
  const auto q = ops::matmul(tape, h, fusion.wq);
  const auto k = ops::matmul(tape, z, fusion.wk);
  const auto v = ops::matmul(tape, z, fusion.wv);
  const auto logits = ops::scale(tape, ops::matmul(tape, q, k, false, true), 1.0 / std::sqrt(double(fusion.dk())));
  auto out = ops::matmul(tape, ops::softmax_rows(tape, logits), v);
  if (fusion.residual) {
    if (out.shape() != h.shape()) throw ShapeError("residual fusion needs d_k == d");
    out = ops::add(tape, out, h);
  }
  return out;
}

template <typename T>
BasicTensor<T> edge_logits(tensor::BasicTape<T>& tape, const BasicTensor<T>& h_prime, const BasicTensor<T>& w,
                           std::span<const graph::Edge> edges) {
  if (w.rank() != 2 || w.rows() != h_prime.cols() || w.cols() != 1)
    throw ShapeError("link head " + tensor::shape_str(w.shape()) + " does not match width " +
                     std::to_string(h_prime.cols()));
  std::vector<std::int32_t> us, vs;
  us.reserve(edges.size());
  vs.reserve(edges.size());
  for (const auto& e : edges) us.push_back(e.u), vs.push_back(e.v);
  const auto prod = ops::mul(tape, ops::gather_rows(tape, h_prime, us), ops::gather_rows(tape, h_prime, vs));
  return ops::matmul(tape, prod, w);
}

std::vector<double> classify(std::span<const double> logits) {
  if (logits.empty()) throw ContractError("classify needs at least one logit");
  double top = logits[0];
  for (double x : logits) top = std::max(top, x);
  std::vector<double> p(logits.size());
  double total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += p[i] = std::exp(logits[i] - top);
  for (auto& x : p) x /= total;
  return p;
}

double link_score(std::span<const double> a, std::span<const double> b, std::span<const double> w) {
  if (a.size() != b.size() || a.size() != w.size()) throw ShapeError("link_score widths differ");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i] * w[i];
  return 1.0 / (1.0 + std::exp(-s));
}

template <typename T>
std::vector<BasicTensor<T>> BasicModel<T>::parameters() const {
  auto p = encoder.parameters();
  p.insert(p.end(), {fusion.wq, fusion.wk, fusion.wv, head});
  return p;
}

template <typename T>
BasicTensor<T> BasicModel<T>::represent(tensor::BasicTape<T>& tape, const BasicTensor<T>& features,
                                        const tensor::SparseMatrix<T>& adjacency) const {
  return cross_attention(tape, encoder.forward(tape, features, adjacency), codebook, fusion);
}

Model make_model(const align::GcnEncoder& encoder, const tensor::Tensor& codebook, std::size_t outputs,
                 const ModelInit& init, std::uint64_t seed) {
  if (outputs < 1) throw ContractError("task head needs at least one output");
  const auto d = encoder.out_dim();
  const auto dk = init.dk == 0 ? d : init.dk;
  Rng rng(seed);
  Model m;
  m.encoder = encoder.cast<float>(true);
  Rng fusion_rng = rng.split("fusion");
  m.fusion = FusionHead::init(d, dk, init.noise, fusion_rng, init.query_scale);
  m.fusion.residual = init.residual;
  Rng head_rng = rng.split("head");
  std::vector<float> w(dk * outputs, 1.0f);
  if (outputs > 1)
    for (auto& x : w) x = static_cast<float>(head_rng.normal() / std::sqrt(double(dk)));
  m.head = tensor::Tensor({dk, outputs}, std::move(w), true);
  m.codebook = codebook.clone();
  return m;
}

template <typename T>
BasicTensor<T> node_loss(tensor::BasicTape<T>& tape, const BasicModel<T>& m, const BasicTensor<T>& features,
                         const tensor::SparseMatrix<T>& adjacency, std::span<const std::int32_t> nodes,
                         std::span<const std::int32_t> labels) {
  const auto h = m.represent(tape, features, adjacency);
  const auto logits = ops::matmul(tape, ops::gather_rows(tape, h, nodes), m.head);
  return ops::cross_entropy(tape, logits, labels);
}

template <typename T>
BasicTensor<T> link_loss(tensor::BasicTape<T>& tape, const BasicModel<T>& m, const BasicTensor<T>& features,
                         const tensor::SparseMatrix<T>& adjacency, std::span<const graph::Edge> positives,
                         std::span<const graph::Edge> negatives) {
  std::vector<graph::Edge> all(positives.begin(), positives.end());
  all.insert(all.end(), negatives.begin(), negatives.end());
  std::vector<T> targets(all.size(), T(0));
  std::fill(targets.begin(), targets.begin() + static_cast<std::ptrdiff_t>(positives.size()), T(1));
  const auto h = m.represent(tape, features, adjacency);
  return ops::bce_with_logits(tape, edge_logits(tape, h, m.head, all), std::span<const T>(targets));
}

tensor::Checkpoint model_checkpoint(const Model& m) {
  tensor::Checkpoint ck;
  ck.put("adapter", m.encoder.adapter());
  for (std::size_t l = 0; l < m.encoder.weights().size(); ++l) ck.put("w" + std::to_string(l), m.encoder.weights()[l]);
  ck.put("wq", m.fusion.wq);
  ck.put("wk", m.fusion.wk);
  ck.put("wv", m.fusion.wv);
  ck.put("head", m.head);
  ck.put("codebook", m.codebook);
  ck.meta["layers"] = m.encoder.weights().size();
  ck.meta["residual"] = m.fusion.residual;
  return ck;
}

Model model_from_checkpoint(const tensor::Checkpoint& ck) {
  auto grad = [&](const std::string& name) {
    auto t = ck.get(name).clone();
    t.set_requires_grad(true);
    return t;
  };
  Model m;
  std::vector<tensor::Tensor> w;
  const auto layers = ck.meta.at("layers").get<std::size_t>();
  for (std::size_t l = 0; l < layers; ++l) w.push_back(grad("w" + std::to_string(l)));
  m.encoder = align::GcnEncoder(grad("adapter"), std::move(w));
  m.fusion = {grad("wq"), grad("wk"), grad("wv"), ck.meta.at("residual").get<bool>()};
  m.head = grad("head");
  m.codebook = ck.get("codebook").clone();
  return m;
}

#define GAGA_INSTANTIATE(T)                                                                                         \
  template struct BasicFusionHead<T>;                                                                               \
  template struct BasicModel<T>;                                                                                    \
  template BasicTensor<T> cross_attention<T>(tensor::BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&,   \
                                             const BasicFusionHead<T>&);                                            \
  template BasicTensor<T> edge_logits<T>(tensor::BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&,       \
                                         std::span<const graph::Edge>);                                             \
  template BasicTensor<T> node_loss<T>(tensor::BasicTape<T>&, const BasicModel<T>&, const BasicTensor<T>&,          \
                                       const tensor::SparseMatrix<T>&, std::span<const std::int32_t>,               \
                                       std::span<const std::int32_t>);                                              \
  template BasicTensor<T> link_loss<T>(tensor::BasicTape<T>&, const BasicModel<T>&, const BasicTensor<T>&,          \
                                       const tensor::SparseMatrix<T>&, std::span<const graph::Edge>,                \
                                       std::span<const graph::Edge>);

GAGA_INSTANTIATE(float)
GAGA_INSTANTIATE(double)

}  // namespace gaga::downstream
