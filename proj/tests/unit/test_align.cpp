#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "gaga/align/align_train.hpp"
#include "gaga/align/codebook.hpp"
#include "gaga/align/gcn.hpp"
#include "gaga/align/losses.hpp"
#include "gaga/align/subgraph.hpp"
#include "gaga/common/error.hpp"
#include "gaga/tensor/ops.hpp"
#include "../support/composite_grad.hpp"
#include "../support/oracles.hpp"
#include "../support/synthetic_inputs.hpp"

using namespace gaga;
using namespace gaga::align;
using graph::Edge;
using graph::NodeId;
using tensor::Tensor;
using tensor::TensorD;

namespace {

graph::Tag plain_tag(std::size_t n, std::vector<Edge> edges) {
  graph::Tag t;
  t.texts.assign(n, "x");
  t.labels.assign(n, graph::kNoLabel);
  t.split.assign(n, graph::Split::none);
  t.graph = graph::CsrGraph(n, edges);
  return t;
}

annograph::AnnotationGraph plain_anno(std::vector<providers::AnnotationTarget> targets, std::vector<Edge> edges) {
  annograph::AnnotationGraph g;
  g.tag = plain_tag(targets.size(), std::move(edges));
  g.targets = std::move(targets);
  return g;
}

providers::AnnotationTarget node(NodeId v) { return {select::ItemKind::node, v, 0}; }

TensorD col(std::vector<double> v) {
  const auto n = v.size();
  return TensorD({n, 1}, std::move(v));
}

TensorD random_rows(Rng& rng, std::size_t n, std::size_t d, bool grad = false) {
  std::vector<double> x(n * d);
  for (auto& v : x) v = rng.normal();
  return TensorD({n, d}, std::move(x), grad);
}

double loss_value(const TensorD& a, const TensorD& b) {
  tensor::TapeD tape;
  return loss_eq1(tape, a, b).item();
}

}  // namespace

TEST_CASE("subgraph: path a-b-c, seed a, 1 hop") {
  auto tag = plain_tag(3, {{0, 1}, {1, 2}});
  auto ag = plain_anno({node(0), node(2)}, {});
  auto p = sample_subgraph_pair(tag, ag, node(0), 1);
  CHECK(p.text.nodes == std::vector<NodeId>{0, 1});
  CHECK(p.text.edges == std::vector<Edge>{{0, 1}});
  CHECK(p.annotation.nodes == std::vector<NodeId>{0});  // isolated annotation node
  CHECK(p.annotation.edges.empty());
  CHECK(p.anno_index == 0);
  CHECK(sample_subgraph_pair(tag, ag, node(2), 5).anno_index == 1);
}

TEST_CASE("subgraph: 2 hops on a 5-cycle reach every node") {
  auto tag = plain_tag(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}});
  auto ag = plain_anno({node(0), node(1), node(2), node(3), node(4)}, {{0, 1}});
  for (NodeId s = 0; s < 5; ++s) {
    auto p = sample_subgraph_pair(tag, ag, node(s), 2);
    CHECK(p.text.nodes.size() == 5);
    CHECK(p.text.nodes.front() == s);
    CHECK(p.text.edges.size() == 5);
  }
  // isolated annotation node stays alone at any radius
  CHECK(sample_subgraph_pair(tag, ag, node(4), 9).annotation.nodes == std::vector<NodeId>{4});
}

TEST_CASE("subgraph: unannotated seed is rejected, edge seeds expand around both endpoints, cap truncates") {
  auto tag = plain_tag(6, {{0, 1}, {1, 2}, {3, 4}, {4, 5}});
  auto ag = plain_anno({node(0), {select::ItemKind::edge, 1, 4}}, {});
  CHECK_THROWS_AS(sample_subgraph_pair(tag, ag, node(3), 1), ValidationError);
  auto p = sample_subgraph_pair(tag, ag, {select::ItemKind::edge, 1, 4}, 1);
  auto nodes = p.text.nodes;
  std::sort(nodes.begin(), nodes.end());
  CHECK(nodes == std::vector<NodeId>{0, 1, 2, 3, 4, 5});
  CHECK(p.annotation.nodes == std::vector<NodeId>{1});
  auto capped = sample_subgraph_pair(tag, ag, node(0), 2, 2);
  CHECK(capped.text.nodes == std::vector<NodeId>{0, 1});
}

TEST_CASE("normalized adjacency of K2 with self-loops is all one half") {
  const std::vector<Edge> e{{0, 1}};
  auto a = normalized_adjacency<double>(2, e);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) CHECK(a.at(r, c) == doctest::Approx(0.5).epsilon(1e-15));
  auto lone = normalized_adjacency<double>(1, {});
  CHECK(lone.at(0, 0) == 1.0);
}

TEST_CASE("gcn: two connected nodes, one layer, W=[[1]] gives pre-norm [[2],[2]]") {
  BasicGcnEncoder<double> enc(TensorD({1, 1}, {1.0}), {TensorD({1, 1}, {1.0})});
  const std::vector<Edge> e{{0, 1}};
  auto adj = normalized_adjacency<double>(2, e);
  tensor::TapeD tape;
  auto x = col({1, 3});
  auto pre = tensor::ops::spmm(tape, adj, tensor::ops::matmul(tape, x, enc.weights()[0]));
  CHECK(pre.at(0, 0) == doctest::Approx(2.0));
  CHECK(pre.at(1, 0) == doctest::Approx(2.0));
  auto out = enc.forward(tape, x, adj);
  CHECK(out.at(0, 0) == doctest::Approx(1.0));
  CHECK(out.at(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("gcn: lone node with identity weights is normalize(relu(x))") {
  const std::size_t d = 4;
  std::vector<double> eye(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) eye[i * d + i] = 1;
  BasicGcnEncoder<double> enc(TensorD({d, d}, eye), {TensorD({d, d}, eye), TensorD({d, d}, eye), TensorD({d, d}, eye)});
  tensor::TapeD tape;
  TensorD x({1, d}, {3, -1, 4, 0});
  auto out = enc.forward(tape, x, normalized_adjacency<double>(1, {}));
  CHECK(out.at(0, 0) == doctest::Approx(0.6));
  CHECK(out.at(0, 1) == 0.0);
  CHECK(out.at(0, 2) == doctest::Approx(0.8));
  CHECK_THROWS_AS(enc.forward(tape, TensorD({1, 3}, {1, 2, 3}), normalized_adjacency<double>(1, {})), ShapeError);
}

TEST_CASE("gcn: permuting nodes permutes output rows") {
  Rng rng(11);
  auto enc = BasicGcnEncoder<double>::init(GcnShape{5, 7, 3, 5}, 0.3, rng);
  const std::size_t n = 9;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(0.3)) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
  auto x = random_rows(rng, n, 5);
  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm.begin(), perm.end());
  // node i of the original graph becomes node pos[i]
  std::vector<NodeId> pos(n);
  for (std::size_t k = 0; k < n; ++k) pos[perm[k]] = static_cast<NodeId>(k);
  std::vector<Edge> pedges;
  for (auto e : edges) pedges.push_back({pos[e.u], pos[e.v]});
  std::vector<double> px(n * 5);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t c = 0; c < 5; ++c) px[k * 5 + c] = x.at(perm[k], c);
  tensor::TapeD tape;
  auto a = enc.forward(tape, x, normalized_adjacency<double>(n, edges));
  auto b = enc.forward(tape, TensorD({n, 5}, px), normalized_adjacency<double>(n, pedges));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t c = 0; c < 5; ++c) CHECK(b.at(k, c) == doctest::Approx(a.at(perm[k], c)).epsilon(1e-12));
}

TEST_CASE("batch pooling averages each block and matches per-graph encoding") {
  Rng rng(12);
  auto enc = BasicGcnEncoder<double>::init(GcnShape{4, 6, 2, 4}, 0.2, rng);
  auto feats = random_rows(rng, 10, 4);
  Subgraph s1{{3, 1, 7}, {{0, 1}, {1, 2}}}, s2{{5}, {}}, s3{{0, 2, 9, 4}, {{0, 3}, {2, 3}}};
  std::vector<const Subgraph*> parts{&s1, &s2, &s3};
  auto batch = make_batch<double>(parts);
  CHECK(batch.graphs == 3);
  CHECK(batch.feature_rows.size() == 8);
  tensor::TapeD tape;
  auto pooled = enc.encode_batch(tape, feats, batch);
  for (std::size_t g = 0; g < 3; ++g) {
    std::vector<const Subgraph*> one{parts[g]};
    auto single = enc.encode_batch(tape, feats, make_batch<double>(one));
    double norm = 0;
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(pooled.at(g, c) == doctest::Approx(single.at(0, c)).epsilon(1e-12));
      norm += pooled.at(g, c) * pooled.at(g, c);
    }
    CHECK(norm == doctest::Approx(1.0));
  }
}

TEST_CASE("loss_eq1 hand-derived values") {
  CHECK(loss_value(col({0, 1}), col({0, 1})) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(std::abs(loss_value(col({0, 1}), col({0, 1})) + 2.0) < 1e-6);
  CHECK(std::abs(loss_value(col({0, 1}), col({1, 0})) - 2.0) < 1e-6);
  CHECK(loss_value(col({0.3, 0.3, 0.3}), col({0.3, 0.3, 0.3})) == 0.0);
  tensor::TapeD tape;
  CHECK_THROWS_AS(loss_eq1(tape, col({1}), col({1})), ContractError);
  CHECK_THROWS_AS(loss_eq1(tape, col({1, 2}), col({1, 2, 3})), ShapeError);
}

TEST_CASE("loss_eq1 matches the term-by-term sum and is permutation invariant") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(12), d = 1 + rng.below(6);
    auto a = random_rows(rng, n, d), b = random_rows(rng, n, d);
    const double v = loss_value(a, b);
    CHECK(v == doctest::Approx(testing::contrast_oracle(a, b)).epsilon(1e-10));
    std::vector<std::int32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    tensor::TapeD tape;
    auto pa = tensor::ops::gather_rows(tape, a, perm), pb = tensor::ops::gather_rows(tape, b, perm);
    CHECK(loss_value(pa, pb) == doctest::Approx(v).epsilon(1e-10));
  }
}

TEST_CASE("vq_map examples and ties") {
  auto cb = col({0, 10});
  const double two = 2, five = 5, seven = 7;
  CHECK(vq_map<double>(std::span(&two, 1), cb).index == 0);
  CHECK(vq_map<double>(std::span(&five, 1), cb).index == 0);
  CHECK(vq_map<double>(std::span(&seven, 1), cb).index == 1);
  CHECK_THROWS_AS(vq_map<double>(std::span(&two, 1), TensorD{}), ContractError);
  const std::vector<double> wide{1, 2};
  CHECK_THROWS_AS(vq_map<double>(wide, cb), ShapeError);
}

TEST_CASE("vq_map agrees with exhaustive search on 1000 instances") {
  Rng rng(14);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 1 + rng.below(20), d = 1 + rng.below(8);
    // small integer grid so exact ties occur
    std::vector<double> cbv(k * d), row(d);
    for (auto& v : cbv) v = static_cast<double>(rng.below(5));
    for (auto& v : row) v = static_cast<double>(rng.below(5));
    TensorD cb({k, d}, cbv);
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0;
      for (std::size_t c = 0; c < d; ++c) s += (row[c] - cbv[j * d + c]) * (row[c] - cbv[j * d + c]);
      if (s < best_d) best_d = s, best = j;
    }
    const auto m = vq_map<double>(row, cb);
    CHECK(static_cast<std::size_t>(m.index) == best);
    CHECK(m.sq_dist == best_d);
  }
}

TEST_CASE("loss_combined endpoints and the hand-derived mix") {
  tensor::TapeD tape;
  // h_a rows (1),(0) quantize to (1.5),(-0.5): prototype term 2*(1.5-(-0.5)) = 4; L1 = 2.
  auto h_t = col({0, 1}), h_a = col({1, 0}), cb = col({1.5, -0.5});
  CHECK(loss_combined(tape, h_t, h_a, cb, 0.5).item() == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(loss_combined(tape, h_t, h_a, cb, 1.0).item() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(loss_combined(tape, h_t, h_a, cb, 0.0).item() == loss_eq1(tape, h_t, h_a).item());
  CHECK_THROWS_AS(loss_combined(tape, h_t, h_a, cb, 1.5), ContractError);
  CHECK_THROWS_AS(loss_combined(tape, h_t, h_a, cb, -0.1), ContractError);
  Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    auto a = random_rows(rng, 6, 3), b = random_rows(rng, 6, 3), z = random_rows(rng, 4, 3);
    CHECK(loss_combined(tape, a, b, z, 0.0).item() == loss_eq1(tape, a, b).item());
  }
}

TEST_CASE("loss_combined gradient w.r.t. encoder parameters matches finite differences (straight-through)") {
  Rng rng(16);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) worst = std::max(worst, testing::combined_loss_grad_error(rng));
  CHECK(worst < 1e-4);
}

TEST_CASE("update_codebook: gamma 0 gives the batch mean; no mass leaves a row unchanged") {
  auto cb = make_codebook(Tensor({2, 2}, {5, 5, -3, 7}), 0.0);
  Rng rng(1);
  Tensor batch({3, 2}, {1, 2, 3, 4, 5, 9});
  const std::vector<std::int32_t> assign{0, 0, 0};
  update_codebook(cb, batch, assign, rng);
  CHECK(cb.z.at(0, 0) == doctest::Approx(3.0));
  CHECK(cb.z.at(0, 1) == doctest::Approx(5.0));
  CHECK(cb.z.at(1, 0) == -3.0f);
  CHECK(cb.z.at(1, 1) == 7.0f);
  CHECK(cb.counts[0] == 3.0);
  auto decayed = make_codebook(Tensor({2, 1}, {1, 2}), 0.5);
  update_codebook(decayed, Tensor({1, 1}, {1.2f}), std::vector<std::int32_t>{0}, rng);
  CHECK(decayed.z.at(1, 0) == 2.0f);
  CHECK(decayed.counts[1] == 0.5);
}

TEST_CASE("update_codebook converges to the batch centroid geometrically") {
  auto cb = make_codebook(Tensor({2, 3}, {4, -4, 2, 9, 9, 9}), 0.99);
  Tensor batch({4, 3}, {0.1f, 0.2f, 0.3f, 0.5f, -0.1f, 0.0f, 0.3f, 0.3f, 0.3f, -0.1f, 0.0f, 0.2f});
  const std::vector<std::int32_t> assign{0, 0, 0, 0};
  Rng rng(2);
  for (int step = 0; step < 1000; ++step) update_codebook(cb, batch, assign, rng, 100000);
  const double centroid[3] = {0.2, 0.1, 0.2};
  for (int c = 0; c < 3; ++c) CHECK(std::abs(cb.z.at(0, c) - centroid[c]) < 1e-3);
  // Oracle: weight left on the initial row after t steps is gamma^t c0 / c_t.
  const double c_t = std::pow(0.99, 1000) * 1 + (1 - std::pow(0.99, 1000)) * 4;
  CHECK(cb.counts[0] == doctest::Approx(c_t).epsilon(1e-9));
}

TEST_CASE("update_codebook reseeds a prototype idle for more than the limit") {
  auto cb = make_codebook(Tensor({2, 1}, {0, 100}), 0.9);
  Tensor batch({2, 1}, {1, 2});
  const std::vector<std::int32_t> assign{0, 0};
  Rng rng(3);
  for (int step = 0; step < 50; ++step) update_codebook(cb, batch, assign, rng, 50);
  CHECK(cb.z.at(1, 0) == 100.0f);
  CHECK(cb.idle[1] == 50);
  update_codebook(cb, batch, assign, rng, 50);
  CHECK((cb.z.at(1, 0) == 1.0f || cb.z.at(1, 0) == 2.0f));
  CHECK(cb.idle[1] == 0);
  CHECK(cb.counts[1] == 1.0);
}

TEST_CASE("init_codebook uses k-means centers then pads with perturbed copies") {
  Tensor pool({3, 2}, {0, 0, 10, 10, 0, 10});
  auto cb = init_codebook(pool, 5, 0.99, 7);
  CHECK(cb.size() == 5);
  for (std::size_t j = 0; j < 3; ++j) {
    bool found = false;
    for (std::size_t r = 0; r < 3; ++r) found |= cb.z.at(j, 0) == pool.at(r, 0) && cb.z.at(j, 1) == pool.at(r, 1);
    CHECK(found);
  }
  for (std::size_t j = 3; j < 5; ++j) CHECK(std::abs(cb.z.at(j, 0) - cb.z.at(j - 3, 0)) < 0.1);
  CHECK_THROWS_AS(init_codebook(pool, 0, 0.99, 1), ContractError);
}

TEST_CASE("epoch batches cover each seed once and never leave a singleton") {
  Rng rng(4);
  for (std::size_t n : {2u, 5u, 32u, 33u, 65u, 70u}) {
    auto b = epoch_batches(n, 32, rng);
    std::vector<std::size_t> all;
    for (auto& x : b) {
      CHECK(x.size() >= 2);
      all.insert(all.end(), x.begin(), x.end());
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> want(n);
    std::iota(want.begin(), want.end(), 0);
    CHECK(all == want);
  }
}

TEST_CASE("align_train with zero epochs returns the initial encoder") {
  auto in = testing::synthetic_inputs(graph::SynthSpec{}, 1);
  AlignConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 3;
  auto r = align_train(in.tag, in.text_features, in.anno, in.anno_features, cfg);
  auto init = initial_encoder(64, cfg);
  CHECK(r.log.empty());
  CHECK(r.encoder.adapter().data()[0] == init.adapter().data()[0]);
  for (std::size_t l = 0; l < 4; ++l)
    CHECK(std::equal(r.encoder.weights()[l].data().begin(), r.encoder.weights()[l].data().end(),
                     init.weights()[l].data().begin()));
  CHECK(r.codebook.size() == 40);
}

// With two identical pairs every distance in the contrast sum is the same, so
// the loss is exactly zero for any weights and training cannot move the pair.
TEST_CASE("two identical seeds give an identically zero loss") {
  tensor::TapeD tape;
  auto h = col({0.3, 0.3}), a = col({-0.8, -0.8});
  CHECK(loss_eq1(tape, h, a).item() == 0.0);
  CHECK(loss_combined(tape, h, a, col({0.1, 0.9}), 0.6).item() == 0.0);
}

TEST_CASE("align_train: two identical seeds pull their matched pair together" * doctest::should_fail()) {
  graph::Tag tag = plain_tag(2, {});
  tag.texts = {"same words here", "same words here"};
  annograph::AnnotationGraph ag = plain_anno({node(0), node(1)}, {{0, 1}});
  providers::HashEmbedder emb(16);
  auto xt = emb.embed(tag.texts);
  const std::vector<std::string> notes{"concepts: same", "concepts: same"};
  auto xa = emb.embed(notes);
  AlignConfig cfg;
  cfg.kp = 4;
  cfg.hidden = 16;
  cfg.seed = 5;
  auto r = align_train(tag, xt, ag, xa, cfg);
  auto pe = embed_pairs(r.encoder, tag, xt, ag, xa, cfg.hops, cfg.node_cap);
  for (std::size_t i = 0; i < 2; ++i) {
    double dist = 0;
    for (std::size_t c = 0; c < 16; ++c) dist += std::pow(pe.text.at(i, c) - pe.annotation.at(i, c), 2.0);
    CHECK(dist < 0.05);
  }
}

TEST_CASE("align_train on the synthetic TAG: loss falls and matched pairs end closer than mismatched") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto in = testing::synthetic_inputs(graph::SynthSpec{}, seed);
    AlignConfig cfg;
    cfg.seed = seed;
    // 1% of 500 nodes is 5 annotations, so any 2-hop annotation subgraph is
    // the whole annotation graph; radius 0 keeps the pairs distinct.
    cfg.anno_hops = 0;
    auto r = align_train(in.tag, in.text_features, in.anno, in.anno_features, cfg);
    REQUIRE(r.log.size() == 200);
    INFO("seed " << seed << " first " << r.log.front().loss << " last " << r.log.back().loss);
    CHECK(r.log.back().loss < 0.5 * r.log.front().loss);
    auto pe = embed_pairs(r.encoder, in.tag, in.text_features, in.anno, in.anno_features, 2, 256, 0);
    const auto n = pe.text.rows();
    double matched = 0, mismatched = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double dist = 0;
        for (std::size_t c = 0; c < pe.text.cols(); ++c) dist += std::pow(pe.text.at(i, c) - pe.annotation.at(j, c), 2.0);
        (i == j ? matched : mismatched) += dist;
      }
    matched /= static_cast<double>(n);
    mismatched /= static_cast<double>(n * (n - 1));
    CHECK(matched < mismatched);
  }
}

TEST_CASE("default radius on a 5-seed annotation graph makes every annotation side identical") {
  auto in = testing::synthetic_inputs(graph::SynthSpec{}, 1);
  AlignConfig cfg;
  cfg.epochs = 2;
  auto r = align_train(in.tag, in.text_features, in.anno, in.anno_features, cfg);
  CHECK(r.log[0].loss == 0.0);
}

TEST_CASE("alignment checkpoint round trip is exact") {
  auto in = testing::synthetic_inputs(graph::SynthSpec{}, 2);
  AlignConfig cfg;
  cfg.epochs = 3;
  auto r = align_train(in.tag, in.text_features, in.anno, in.anno_features, cfg);
  auto dir = std::filesystem::temp_directory_path() / "gaga_test_align_ckpt";
  std::filesystem::remove_all(dir);
  save_alignment(dir, r, {{"alpha", 0.6}});
  auto back = load_alignment(dir);
  CHECK(std::equal(back.codebook.z.data().begin(), back.codebook.z.data().end(), r.codebook.z.data().begin()));
  CHECK(back.log.size() == 3);
  CHECK(back.log[2].loss == r.log[2].loss);
  for (std::size_t l = 0; l < 4; ++l)
    CHECK(std::equal(back.encoder.weights()[l].data().begin(), back.encoder.weights()[l].data().end(),
                     r.encoder.weights()[l].data().begin()));
}
