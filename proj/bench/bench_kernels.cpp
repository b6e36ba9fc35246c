// Serial reference kernels against their OpenMP versions at a few sizes.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "gaga/kernels/kernels.hpp"

namespace k = gaga::kernels;

namespace {

std::vector<float> random_matrix(std::size_t rows, std::size_t cols, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<float> dist;
  std::vector<float> v(rows * cols);
  for (auto& x : v) x = dist(gen);
  return v;
}

// Random sparse rows with `per_row` non-zeros, like a normalized adjacency.
struct Csr {
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int32_t> col_idx;
  std::vector<float> values;
  std::size_t n;
  k::CsrView<float> view() const { return {row_ptr, col_idx, values, n, n}; }
};

Csr random_csr(std::size_t n, std::size_t per_row, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_int_distribution<std::int32_t> col(0, static_cast<std::int32_t>(n) - 1);
  Csr s{{0}, {}, {}, n};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < per_row; ++j) {
      s.col_idx.push_back(col(gen));
      s.values.push_back(1.0f / static_cast<float>(per_row));
    }
    s.row_ptr.push_back(static_cast<std::int64_t>(s.col_idx.size()));
  }
  return s;
}

template <bool Parallel>
void BM_gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  std::vector<float> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::omp::gemm<float>({a.data(), n, n}, false, {b.data(), n, n}, false, {c.data(), n, n}, false);
    else
      k::serial::gemm<float>({a.data(), n, n}, false, {b.data(), n, n}, false, {c.data(), n, n}, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <bool Parallel>
void BM_spmm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 64;
  const auto s = random_csr(n, 8, 3);
  const auto x = random_matrix(n, d, 4);
  std::vector<float> out(n * d);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::omp::spmm<float>(s.view(), {x.data(), n, d}, {out.data(), n, d}, false);
    else
      k::serial::spmm<float>(s.view(), {x.data(), n, d}, {out.data(), n, d}, false);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_pairwise_sq_dist(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 64;
  const auto a = random_matrix(n, d, 5), b = random_matrix(n, d, 6);
  std::vector<float> out(n * n);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::omp::pairwise_sq_dist<float>({a.data(), n, d}, {b.data(), n, d}, {out.data(), n, n});
    else
      k::serial::pairwise_sq_dist<float>({a.data(), n, d}, {b.data(), n, d}, {out.data(), n, n});
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_nearest_rows(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 64, kp = 40;
  const auto a = random_matrix(n, d, 7), z = random_matrix(kp, d, 8);
  std::vector<std::int32_t> index(n);
  std::vector<double> dist(n);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::omp::nearest_rows<float>({a.data(), n, d}, {z.data(), kp, d}, index, dist);
    else
      k::serial::nearest_rows<float>({a.data(), n, d}, {z.data(), kp, d}, index, dist);
    benchmark::DoNotOptimize(index.data());
  }
}

template <bool Parallel>
void BM_cosine_matrix(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 64;
  const auto a = random_matrix(n, d, 9);
  std::vector<float> out(n * n);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::omp::cosine_matrix<float>({a.data(), n, d}, {out.data(), n, n});
    else
      k::serial::cosine_matrix<float>({a.data(), n, d}, {out.data(), n, n});
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_gemm<false>)->Name("gemm/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_gemm<true>)->Name("gemm/omp")->Arg(64)->Arg(256);
BENCHMARK(BM_spmm<false>)->Name("spmm/serial")->Arg(1000)->Arg(20000);
BENCHMARK(BM_spmm<true>)->Name("spmm/omp")->Arg(1000)->Arg(20000);
BENCHMARK(BM_pairwise_sq_dist<false>)->Name("pairwise_sq_dist/serial")->Arg(256)->Arg(1024);
BENCHMARK(BM_pairwise_sq_dist<true>)->Name("pairwise_sq_dist/omp")->Arg(256)->Arg(1024);
BENCHMARK(BM_nearest_rows<false>)->Name("nearest_rows/serial")->Arg(1000)->Arg(20000);
BENCHMARK(BM_nearest_rows<true>)->Name("nearest_rows/omp")->Arg(1000)->Arg(20000);
BENCHMARK(BM_cosine_matrix<false>)->Name("cosine_matrix/serial")->Arg(256)->Arg(1024);
BENCHMARK(BM_cosine_matrix<true>)->Name("cosine_matrix/omp")->Arg(256)->Arg(1024);

BENCHMARK_MAIN();
