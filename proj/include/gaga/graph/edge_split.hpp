#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gaga/graph/tag.hpp"

namespace gaga::graph {

struct EdgeSplit {
  std::vector<Edge> train, valid, test;  // canonical (u < v)
  std::vector<std::vector<Edge>> valid_negatives, test_negatives;  // one list per positive

  friend bool operator==(const EdgeSplit&, const EdgeSplit&) = default;
};

// `fractions` are (train, valid, test) shares of the edge set. The test and
// valid counts are floor(fraction * |E|); train takes the remainder. Each
// evaluation positive gets K distinct non-edges of the full graph, drawn
// uniformly over unordered node pairs.
EdgeSplit make_edge_split(const Tag& tag, std::array<double, 3> fractions, std::size_t negatives_per_edge,
                          std::uint64_t seed);

std::string serialize_edge_split(const EdgeSplit& split);
EdgeSplit parse_edge_split(std::string_view json_text);

}  // namespace gaga::graph
