#include "gaga/graph/csr_graph.hpp"

#include <algorithm>
#include <unordered_map>

#include "gaga/common/error.hpp"

namespace gaga::graph {

CsrGraph::CsrGraph(std::size_t num_nodes, std::span<const Edge> edges) {
  std::vector<Edge> directed;
  directed.reserve(edges.size() * 2);
  for (const auto& e : edges) {
    if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= num_nodes || static_cast<std::size_t>(e.v) >= num_nodes)
      throw ValidationError("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                            ") has an endpoint outside [0, " + std::to_string(num_nodes) + ")");
    if (e.u == e.v) continue;
    directed.push_back({e.u, e.v});
    directed.push_back({e.v, e.u});
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());
  row_ptr_.assign(num_nodes + 1, 0);
  col_idx_.reserve(directed.size());
  for (const auto& e : directed) {
    row_ptr_[static_cast<std::size_t>(e.u) + 1] += 1;
    col_idx_.push_back(e.v);
  }
  for (std::size_t i = 0; i < num_nodes; ++i) row_ptr_[i + 1] += row_ptr_[i];
}

bool CsrGraph::has_edge(NodeId u, NodeId v) const {
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> CsrGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (std::size_t u = 0; u < num_nodes(); ++u)
    for (NodeId v : neighbors(static_cast<NodeId>(u)))
      if (static_cast<NodeId>(u) < v) out.push_back({static_cast<NodeId>(u), v});
  return out;
}

BfsResult bfs_khop(const CsrGraph& g, std::span<const NodeId> sources, int hops, std::size_t cap) {
  BfsResult r;
  std::unordered_map<NodeId, std::int32_t> seen;
  auto full = [&] { return cap != 0 && r.nodes.size() >= cap; };
  for (NodeId s : sources) {
    if (s < 0 || static_cast<std::size_t>(s) >= g.num_nodes())
      throw ValidationError("bfs source " + std::to_string(s) + " out of range");
    if (seen.count(s) || full()) continue;
    seen.emplace(s, 0);
    r.nodes.push_back(s);
    r.hop.push_back(0);
  }
  std::size_t frontier_begin = 0;
  for (int h = 1; h <= hops && !full(); ++h) {
    const std::size_t frontier_end = r.nodes.size();
    for (std::size_t i = frontier_begin; i < frontier_end && !full(); ++i) {
      for (NodeId v : g.neighbors(r.nodes[i])) {
        if (seen.count(v)) continue;
        seen.emplace(v, h);
        r.nodes.push_back(v);
        r.hop.push_back(h);
        if (full()) break;
      }
    }
    if (frontier_end == r.nodes.size()) break;
    frontier_begin = frontier_end;
  }
  return r;
}

std::vector<Edge> induced_edges(const CsrGraph& g, std::span<const NodeId> nodes) {
  std::unordered_map<NodeId, NodeId> local;
  for (std::size_t i = 0; i < nodes.size(); ++i) local.emplace(nodes[i], static_cast<NodeId>(i));
  std::vector<Edge> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (NodeId v : g.neighbors(nodes[i])) {
      auto it = local.find(v);
      if (it != local.end() && static_cast<NodeId>(i) < it->second) out.push_back({static_cast<NodeId>(i), it->second});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace gaga::graph
