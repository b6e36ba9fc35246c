#include "gaga/annograph/annotation_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gaga/common/error.hpp"
#include "gaga/kernels/kernels.hpp"

namespace gaga::annograph {

double cosine_sim(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size())
    throw ShapeError("cosine_sim: dims " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * v[i];
    nu += static_cast<double>(u[i]) * u[i];
    nv += static_cast<double>(v[i]) * v[i];
  }
  if (nu == 0 || nv == 0) throw DegenerateInputError("cosine_sim of a zero-norm vector");
  return std::clamp(dot / std::sqrt(nu * nv), -1.0, 1.0);
}

std::vector<graph::Edge> knn_edges(const graph::EmbeddingTable& emb, std::size_t k) {
  const auto n = emb.count();
  if (k < 1) throw ContractError("knn needs k >= 1");
  if (k >= n)
    throw ContractError("knn k' = " + std::to_string(k) + " must be below the node count " + std::to_string(n));
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0;
    for (float x : emb.row(i)) norm += static_cast<double>(x) * x;
    if (norm == 0) throw DegenerateInputError("annotation embedding " + std::to_string(i) + " has zero norm");
  }
  // Similarities in double so near-ties order the same as a double-precision
  // reference.
  const auto src = emb.data();
  const std::vector<double> wide(src.begin(), src.end());
  std::vector<double> sim(n * n);
  kernels::cosine_matrix(kernels::MatView<double>{wide.data(), n, emb.dim()},
                         kernels::MutMatView<double>{sim.data(), n, n});
  std::vector<graph::Edge> edges;
  edges.reserve(n * k);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    order.erase(order.begin() + static_cast<std::ptrdiff_t>(i));
    const double* row = sim.data() + i * n;
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) { return row[a] != row[b] ? row[a] > row[b] : a < b; });
    for (std::size_t j = 0; j < k; ++j)
      edges.push_back(graph::canonical(static_cast<graph::NodeId>(i), static_cast<graph::NodeId>(order[j])));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

AnnotationGraph build_annotation_graph(std::span<const providers::AnnotationRecord> records,
                                       const graph::EmbeddingTable& emb, std::size_t k) {
  if (records.size() != emb.count())
    throw ShapeError("annotation graph: " + std::to_string(records.size()) + " records but " +
                     std::to_string(emb.count()) + " embedding rows");
  AnnotationGraph g;
  g.k = k;
  const auto edges = knn_edges(emb, k);
  g.tag.texts.reserve(records.size());
  for (const auto& r : records) {
    g.tag.texts.push_back(r.annotation_text);
    g.targets.push_back(r.target);
  }
  g.tag.labels.assign(records.size(), graph::kNoLabel);
  g.tag.split.assign(records.size(), graph::Split::none);
  g.tag.graph = graph::CsrGraph(records.size(), edges);
  return g;
}

void save_annotation_graph(const AnnotationGraph& g, const std::filesystem::path& dir) {
  graph::save_tag(g.tag, dir / "anno_nodes.jsonl", dir / "anno_edges.txt");
}

AnnotationGraph load_annotation_graph(const std::filesystem::path& dir,
                                      std::span<const providers::AnnotationRecord> records, std::size_t k) {
  AnnotationGraph g;
  g.tag = graph::load_tag(dir / "anno_nodes.jsonl", dir / "anno_edges.txt", 0);
  if (g.tag.num_nodes() != records.size())
    throw ValidationError("annotation graph has " + std::to_string(g.tag.num_nodes()) + " nodes but " +
                          std::to_string(records.size()) + " annotation records");
  for (const auto& r : records) g.targets.push_back(r.target);
  g.k = k;
  return g;
}

}  // namespace gaga::annograph
