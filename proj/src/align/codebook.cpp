#include "gaga/align/codebook.hpp"

#include <cmath>

#include "gaga/common/error.hpp"
#include "gaga/graph/embedding_table.hpp"
#include "gaga/select/kmeans.hpp"

namespace gaga::align {

void PrototypeCodebook::validate() const {
  if (!z.defined() || z.rank() != 2 || z.rows() < 1) throw ContractError("codebook needs at least one prototype");
  if (counts.size() != z.rows() || idle.size() != z.rows())
    throw ContractError("codebook bookkeeping does not match its " + std::to_string(z.rows()) + " rows");
  for (float x : z.data())
    if (!std::isfinite(x)) throw ContractError("codebook holds a non-finite value");
  for (double c : counts)
    if (!(c >= 0)) throw ContractError("codebook count is negative");
  if (!(gamma >= 0 && gamma < 1)) throw ContractError("codebook decay must lie in [0, 1)");
}

PrototypeCodebook make_codebook(tensor::Tensor z, double gamma) {
  PrototypeCodebook cb;
  cb.counts.assign(z.rows(), 1.0);
  cb.idle.assign(z.rows(), 0);
  cb.z = std::move(z);
  cb.gamma = gamma;
  cb.validate();
  return cb;
}

PrototypeCodebook init_codebook(const tensor::Tensor& pool, std::size_t kp, double gamma, std::uint64_t seed,
                                double noise) {
  if (kp < 1) throw ContractError("codebook needs k_p >= 1");
  if (pool.rank() != 2 || pool.rows() < 1) throw ContractError("codebook init needs a non-empty pool");
  const auto d = pool.cols();
  const auto k = std::min(kp, pool.rows());
  graph::EmbeddingTable table(pool.rows(), d, std::vector<float>(pool.data().begin(), pool.data().end()));
  const auto cl = select::kmeans(table, k, select::kDefaultKmeansIters, Rng(seed).split("kmeans").next_u64());
  std::vector<float> z(kp * d);
  Rng rng = Rng(seed).split("pad");
  for (std::size_t j = 0; j < kp; ++j) {
    const auto c = cl.center(j % k);
    for (std::size_t i = 0; i < d; ++i)
      z[j * d + i] = c[i] + (j < k ? 0.0f : static_cast<float>(noise * rng.normal()));
  }
  return make_codebook(tensor::Tensor({kp, d}, std::move(z)), gamma);
}

PrototypeCodebook random_codebook(std::size_t kp, std::size_t dim, double gamma, std::uint64_t seed) {
  if (kp < 1 || dim < 1) throw ContractError("codebook needs positive size");
  Rng rng(seed);
  std::vector<float> z(kp * dim);
  for (std::size_t j = 0; j < kp; ++j) {
    double norm = 0;
    std::vector<double> row(dim);
    do {
      norm = 0;
      for (auto& x : row) x = rng.normal(), norm += x * x;
    } while (norm == 0);
    for (std::size_t i = 0; i < dim; ++i) z[j * dim + i] = static_cast<float>(row[i] / std::sqrt(norm));
  }
  return make_codebook(tensor::Tensor({kp, dim}, std::move(z)), gamma);
}

void update_codebook(PrototypeCodebook& cb, const tensor::Tensor& batch, std::span<const std::int32_t> assignments,
                     Rng& rng, int reseed_after) {
  const auto kp = cb.size(), d = cb.dim();
  if (batch.rank() != 2 || batch.cols() != d)
    throw ShapeError("codebook update batch " + tensor::shape_str(batch.shape()) + " vs width " + std::to_string(d));
  if (assignments.size() != batch.rows()) throw ShapeError("one assignment per batch row required");
  std::vector<double> mass(kp, 0.0), sums(kp * d, 0.0);
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    const auto j = assignments[r];
    if (j < 0 || static_cast<std::size_t>(j) >= kp) throw ContractError("assignment outside the codebook");
    mass[j] += 1;
    for (std::size_t i = 0; i < d; ++i) sums[j * d + i] += batch.at(r, i);
  }
  auto z = cb.z.mutable_data();
  const double g = cb.gamma;
  for (std::size_t j = 0; j < kp; ++j) {
    const double old_count = cb.counts[j];
    const double new_count = g * old_count + (1 - g) * mass[j];
    if (mass[j] > 0 && new_count > 0) {
      for (std::size_t i = 0; i < d; ++i)
        z[j * d + i] = static_cast<float>((g * old_count * z[j * d + i] + (1 - g) * sums[j * d + i]) / new_count);
    }
    cb.counts[j] = new_count;
    cb.idle[j] = mass[j] > 0 ? 0 : cb.idle[j] + 1;
    if (cb.idle[j] > reseed_after && batch.rows() > 0) {
      const auto r = rng.below(batch.rows());
      for (std::size_t i = 0; i < d; ++i) z[j * d + i] = batch.at(r, i);
      cb.counts[j] = 1.0;
      cb.idle[j] = 0;
    }
  }
}

}  // namespace gaga::align
