#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gaga/graph/embedding_table.hpp"

namespace gaga::select {

struct Clustering {
  std::size_t k = 0, dim = 0;
  std::vector<float> centers;            // k x dim, row-major
  std::vector<std::int32_t> assignment;  // nearest center per point, ties to the lowest index
  double inertia = 0;                    // sum of squared distances to assigned centers
  std::vector<double> inertia_history;   // one entry per assignment pass
  int iterations = 0;

  std::span<const float> center(std::size_t c) const { return {centers.data() + c * dim, dim}; }
};

inline constexpr int kDefaultKmeansIters = 100;

// k-means++ seeding followed by Lloyd iterations until the assignment stops
// changing or `max_iter` updates have run. An empty cluster is re-seeded at
// the point farthest from its current center.
Clustering kmeans(const graph::EmbeddingTable& emb, std::size_t k, int max_iter, std::uint64_t seed);

}  // namespace gaga::select
