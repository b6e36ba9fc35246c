#include "gaga/align/subgraph.hpp"

#include "gaga/common/error.hpp"

namespace gaga::align {

Subgraph khop_subgraph(const graph::CsrGraph& g, std::span<const graph::NodeId> sources, int hops, std::size_t cap) {
  if (hops < 0) throw ContractError("subgraph hops must be >= 0");
  Subgraph s;
  s.nodes = graph::bfs_khop(g, sources, hops, cap).nodes;
  s.edges = graph::induced_edges(g, s.nodes);
  return s;
}

std::size_t annotation_index(const annograph::AnnotationGraph& ag, const providers::AnnotationTarget& seed) {
  for (std::size_t i = 0; i < ag.targets.size(); ++i)
    if (ag.targets[i] == seed) return i;
  throw ValidationError("seed " + providers::target_str(seed) + " has no annotation");
}

SubgraphPair sample_subgraph_pair(const graph::Tag& tag, const annograph::AnnotationGraph& ag,
                                  const providers::AnnotationTarget& seed, int hops, std::size_t cap,
                                  int anno_hops) {
  SubgraphPair p;
  p.seed = seed;
  p.anno_index = annotation_index(ag, seed);
  std::vector<graph::NodeId> sources{seed.u};
  if (seed.kind == select::ItemKind::edge) sources.push_back(seed.v);
  for (auto v : sources)
    if (v < 0 || static_cast<std::size_t>(v) >= tag.num_nodes())
      throw ValidationError("seed " + providers::target_str(seed) + " is outside the graph");
  p.text = khop_subgraph(tag.graph, sources, hops, cap);
  const auto anchor = static_cast<graph::NodeId>(p.anno_index);
  p.annotation = khop_subgraph(ag.tag.graph, std::span(&anchor, 1), anno_hops < 0 ? hops : anno_hops, cap);
  return p;
}

}  // namespace gaga::align
