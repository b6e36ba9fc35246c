#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace gaga::graph {

using NodeId = std::int32_t;

struct Edge {
  NodeId u, v;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Canonical undirected form (u < v).
inline Edge canonical(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

// Undirected simple graph in CSR form. Both directions are stored, neighbor
// lists are sorted ascending, and self-loops are never stored.
class CsrGraph {
 public:
  CsrGraph() = default;
  // Duplicates and reversed copies collapse to one edge; self-loops are
  // dropped. Endpoints must already be in range.
  CsrGraph(std::size_t num_nodes, std::span<const Edge> edges);

  std::size_t num_nodes() const noexcept { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t num_edges() const noexcept { return col_idx_.size() / 2; }
  std::span<const NodeId> neighbors(NodeId v) const {
    return {col_idx_.data() + row_ptr_[v], static_cast<std::size_t>(row_ptr_[v + 1] - row_ptr_[v])};
  }
  std::size_t degree(NodeId v) const { return static_cast<std::size_t>(row_ptr_[v + 1] - row_ptr_[v]); }
  bool has_edge(NodeId u, NodeId v) const;

  // Canonical (u < v) edges in lexicographic order.
  std::vector<Edge> edges() const;

  const std::vector<std::int64_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<NodeId>& col_idx() const noexcept { return col_idx_; }

  friend bool operator==(const CsrGraph&, const CsrGraph&) = default;

 private:
  std::vector<std::int64_t> row_ptr_{0};
  std::vector<NodeId> col_idx_;
};

struct BfsResult {
  std::vector<NodeId> nodes;      // discovery order: nearest first
  std::vector<std::int32_t> hop;  // hop distance of each entry in `nodes`
};

// Breadth-first closure of radius `hops` around `sources`. Neighbors are
// expanded in ascending id order; with a cap, the first `cap` discovered
// nodes are kept, so truncation drops the farthest ones.
BfsResult bfs_khop(const CsrGraph& g, std::span<const NodeId> sources, int hops, std::size_t cap = 0);

// Edges of `g` with both endpoints in `nodes`, relabeled to positions in
// `nodes`.
std::vector<Edge> induced_edges(const CsrGraph& g, std::span<const NodeId> nodes);

}  // namespace gaga::graph
