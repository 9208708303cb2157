// Serial reference vs OpenMP kernels on tensor sizes typical of larger grids.

#include <benchmark/benchmark.h>

#include <random>

#include "mcmot/coupling.hpp"
#include "mcmot/kernels.hpp"

using namespace mcmot;

namespace {

struct ScatterData {
  std::vector<double> src, weight, out;
  std::vector<std::size_t> idx;
};

ScatterData scatter_data(std::size_t n, std::size_t buckets) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScatterData d;
  d.src.resize(n);
  d.weight.resize(n);
  d.idx.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    d.src[k] = u(rng);
    d.weight[k] = u(rng) - 0.5;
    d.idx[k] = k % buckets;
  }
  d.out.assign(buckets, 0.0);
  return d;
}

template <bool Parallel>
void BM_ScatterAdd(benchmark::State& state) {
  auto d = scatter_data(static_cast<std::size_t>(state.range(0)), 64);
  for (auto _ : state) {
    std::fill(d.out.begin(), d.out.end(), 0.0);
    if constexpr (Parallel)
      kernels::omp::scatter_add(d.src, d.idx, d.out);
    else
      kernels::serial::scatter_add(d.src, d.idx, d.out);
    benchmark::DoNotOptimize(d.out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_BilinearResidual(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto d = scatter_data(n, n);
  std::vector<std::size_t> id(n);
  for (std::size_t k = 0; k < n; ++k) id[k] = k;
  for (auto _ : state) {
    double r = Parallel ? kernels::omp::max_bilinear_residual(d.src, id, d.weight, id, d.weight, id, d.src, id)
                        : kernels::serial::max_bilinear_residual(d.src, id, d.weight, id, d.weight, id, d.src, id);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_PriceColumns(benchmark::State& state) {
  const int cols = static_cast<int>(state.range(0)), rows = cols / 4, per_col = 8;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> pick(0, rows - 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  kernels::CscMatrix a;
  a.rows = rows;
  a.cols = cols;
  a.start.push_back(0);
  for (int j = 0; j < cols; ++j) {
    for (int k = 0; k < per_col; ++k) {
      a.index.push_back(pick(rng));
      a.value.push_back(u(rng));
    }
    a.start.push_back(static_cast<int>(a.index.size()));
  }
  std::vector<double> y(rows), cost(cols), d(cols);
  for (double& v : y) v = u(rng);
  for (double& v : cost) v = u(rng);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::omp::price_columns(a, y, cost, d);
    else
      kernels::serial::price_columns(a, y, cost, d);
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(state.iterations() * cols);
}

// Whole projection of a coupling tensor: 2 assets x 3 maturities x 8 points.
template <bool Parallel>
void BM_Projection(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  Shape shape(6, m);
  std::vector<double> masses(element_count(shape), 1.0 / static_cast<double>(element_count(shape)));
  const std::vector<std::size_t> axes{0, 1, 2, 3};
  AxisMap map(shape, axes);
  std::vector<std::size_t> idx(masses.size());
  MultiIndex mi(shape.size(), 0);
  for (std::size_t f = 0; f < masses.size(); ++f) {
    idx[f] = map(mi);
    next_index(mi, shape);
  }
  std::vector<double> out(map.sub_size());
  for (auto _ : state) {
    std::fill(out.begin(), out.end(), 0.0);
    if constexpr (Parallel)
      kernels::omp::scatter_add(masses, idx, out);
    else
      kernels::serial::scatter_add(masses, idx, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(masses.size()));
}

}  // namespace

BENCHMARK(BM_ScatterAdd<false>)->Name("scatter_add/serial")->Range(1 << 12, 1 << 22);
BENCHMARK(BM_ScatterAdd<true>)->Name("scatter_add/omp")->Range(1 << 12, 1 << 22);
BENCHMARK(BM_BilinearResidual<false>)->Name("bilinear_residual/serial")->Range(1 << 12, 1 << 22);
BENCHMARK(BM_BilinearResidual<true>)->Name("bilinear_residual/omp")->Range(1 << 12, 1 << 22);
BENCHMARK(BM_PriceColumns<false>)->Name("price_columns/serial")->Range(1 << 12, 1 << 20);
BENCHMARK(BM_PriceColumns<true>)->Name("price_columns/omp")->Range(1 << 12, 1 << 20);
BENCHMARK(BM_Projection<false>)->Name("projection/serial")->DenseRange(6, 12, 3);
BENCHMARK(BM_Projection<true>)->Name("projection/omp")->DenseRange(6, 12, 3);

BENCHMARK_MAIN();
