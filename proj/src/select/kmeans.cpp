#include "gaga/select/kmeans.hpp"

#include <algorithm>
#include <numeric>

#include "gaga/common/error.hpp"
#include "gaga/common/rng.hpp"
#include "gaga/kernels/kernels.hpp"

namespace gaga::select {

namespace {

double sq_dist(std::span<const float> a, std::span<const float> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return s;
}

std::vector<float> plus_plus_init(const graph::EmbeddingTable& emb, std::size_t k, Rng& rng) {
  const auto n = emb.count(), d = emb.dim();
  std::vector<float> centers;
  centers.reserve(k * d);
  std::vector<bool> chosen(n, false);
  auto take = [&](std::size_t i) {
    chosen[i] = true;
    auto r = emb.row(i);
    centers.insert(centers.end(), r.begin(), r.end());
  };
  take(rng.below(n));
  std::vector<double> best(n);
  for (std::size_t i = 0; i < n; ++i) best[i] = sq_dist(emb.row(i), {centers.data(), d});
  while (centers.size() < k * d) {
    const double total = std::accumulate(best.begin(), best.end(), 0.0);
    std::size_t pick = n;
    if (total > 0) {
      double r = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (best[i] <= 0) continue;
        pick = i;
        r -= best[i];
        if (r < 0) break;
      }
    } else {
      // Every remaining point coincides with a center; pick any unused one.
      std::vector<std::size_t> unused;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) unused.push_back(i);
      pick = unused[rng.below(unused.size())];
    }
    take(pick);
    const std::span<const float> c{centers.data() + centers.size() - d, d};
    for (std::size_t i = 0; i < n; ++i) best[i] = std::min(best[i], sq_dist(emb.row(i), c));
  }
  return centers;
}

}  // namespace

Clustering kmeans(const graph::EmbeddingTable& emb, std::size_t k, int max_iter, std::uint64_t seed) {
  const auto n = emb.count(), d = emb.dim();
  if (k < 1) throw ContractError("kmeans needs k >= 1");
  if (k > n) throw ContractError("kmeans k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " points");
  if (max_iter < 0) throw ContractError("kmeans max_iter must be non-negative");

  Rng rng = Rng(seed).split("kmeans");
  Clustering c;
  c.k = k;
  c.dim = d;
  c.centers = plus_plus_init(emb, k, rng);
  c.assignment.assign(n, 0);
  std::vector<double> dist(n);

  auto assign = [&] {
    kernels::nearest_rows(emb.view(), kernels::MatView<float>{c.centers.data(), k, d}, c.assignment, dist);
    c.inertia = std::accumulate(dist.begin(), dist.end(), 0.0);
    c.inertia_history.push_back(c.inertia);
  };
  assign();

  for (int it = 0; it < max_iter; ++it) {
    std::vector<double> sums(k * d, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = static_cast<std::size_t>(c.assignment[i]);
      counts[a] += 1;
      auto r = emb.row(i);
      for (std::size_t j = 0; j < d; ++j) sums[a * d + j] += r[j];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t a = 0; a < k; ++a) {
      if (counts[a] > 0) {
        for (std::size_t j = 0; j < d; ++j)
          c.centers[a * d + j] = static_cast<float>(sums[a * d + j] / static_cast<double>(counts[a]));
        continue;
      }
      // Empty cluster: move it onto the worst-served point not already used
      // for a re-seed in this pass.
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i] && (far == n || dist[i] > dist[far])) far = i;
      taken[far] = true;
      auto r = emb.row(far);
      std::copy(r.begin(), r.end(), c.centers.begin() + static_cast<std::ptrdiff_t>(a * d));
    }
    const auto previous = c.assignment;
    assign();
    c.iterations = it + 1;
    if (c.assignment == previous) break;
  }
  return c;
}

}  // namespace gaga::select
