#pragma once

#include <cstddef>
#include <vector>

#include "gaga/annograph/annotation_graph.hpp"
#include "gaga/graph/csr_graph.hpp"
#include "gaga/graph/tag.hpp"

namespace gaga::align {

inline constexpr std::size_t kDefaultNodeCap = 256;

// One side of a training pair: global node ids in BFS discovery order (the
// seed first) and the induced edges relabeled to positions in `nodes`.
struct Subgraph {
  std::vector<graph::NodeId> nodes;
  std::vector<graph::Edge> edges;

  bool operator==(const Subgraph&) const = default;
};

struct SubgraphPair {
  std::size_t anno_index = 0;  // row of the seed's annotation in the annotation graph
  providers::AnnotationTarget seed;
  Subgraph text;        // around the seed node, or both endpoints of an edge seed
  Subgraph annotation;  // around the seed's annotation node

  bool operator==(const SubgraphPair&) const = default;
};

Subgraph khop_subgraph(const graph::CsrGraph& g, std::span<const graph::NodeId> sources, int hops,
                       std::size_t cap = kDefaultNodeCap);

// Position of `seed` among the annotation graph's targets. Throws
// ValidationError when the seed was never annotated.
std::size_t annotation_index(const annograph::AnnotationGraph& ag, const providers::AnnotationTarget& seed);

// `anno_hops` < 0 uses `hops` on the annotation side as well.
SubgraphPair sample_subgraph_pair(const graph::Tag& tag, const annograph::AnnotationGraph& ag,
                                  const providers::AnnotationTarget& seed, int hops,
                                  std::size_t cap = kDefaultNodeCap, int anno_hops = -1);

}  // namespace gaga::align
