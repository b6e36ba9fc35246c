#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gaga/graph/embedding_table.hpp"
#include "gaga/graph/tag.hpp"
#include "gaga/select/kmeans.hpp"

namespace gaga::select {

// 1 / (1 + ||emb - center||). Lies in (0, 1] and is 1 only at distance 0.
double density_score(std::span<const float> emb, std::span<const float> center);

// Density of every row against its assigned center.
std::vector<double> node_densities(const graph::EmbeddingTable& emb, const Clustering& clustering);

enum class ItemKind { node, edge };

struct SelectionResult {
  ItemKind kind = ItemKind::node;
  std::vector<graph::NodeId> nodes;  // kind == node
  std::vector<graph::Edge> edges;    // kind == edge
  std::vector<double> scores;        // non-increasing, parallel to nodes/edges
  std::size_t budget = 0;            // requested budget after clamping

  std::size_t size() const noexcept { return kind == ItemKind::node ? nodes.size() : edges.size(); }
  friend bool operator==(const SelectionResult&, const SelectionResult&) = default;
};

// Top-`budget` ids by score; equal scores go to the lower id. A budget above
// the population is clamped with a warning.
SelectionResult top_nodes(std::span<const double> scores, std::size_t budget);

SelectionResult select_nodes(const graph::EmbeddingTable& emb, const Clustering& clustering, std::size_t budget);

// Edge score is the sum of its endpoint scores. Ties go to the
// lexicographically smallest (u, v).
SelectionResult select_edges(const graph::Tag& tag, std::span<const double> node_scores, std::size_t budget);

// ceil(rate * n), at least 1.
std::size_t node_budget(std::size_t num_nodes, double rate);
// ceil(sqrt(num_edges)), at least 1.
std::size_t edge_budget(std::size_t num_edges);

// One JSON object per line: {"kind": "node"|"edge", "ids": [...], "score": x}.
std::string serialize_selection(const SelectionResult& s);
SelectionResult parse_selection(std::string_view jsonl);

}  // namespace gaga::select
