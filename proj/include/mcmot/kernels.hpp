#pragma once

// Data-parallel inner loops. Each kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::omp; tests check that the
// two agree and bench/ compares their throughput. Without OpenMP the omp
// namespace forwards to the serial code.

#include <cstddef>
#include <span>
#include <vector>

namespace mcmot::kernels {

/// Compressed sparse columns of the structural part of a constraint matrix.
struct CscMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> start;  // cols + 1
  std::vector<int> index;
  std::vector<double> value;
};

namespace serial {

/// out[idx[k]] += src[k]
void scatter_add(std::span<const double> src, std::span<const std::size_t> idx, std::span<double> out);

/// out[idx[k]] += weight[k] * src[k]
void scatter_add_weighted(std::span<const double> src, std::span<const double> weight,
                          std::span<const std::size_t> idx, std::span<double> out);

/// max_k |a[ia[k]]·b[ib[k]] − c[ic[k]]·d[id[k]]|
double max_bilinear_residual(std::span<const double> a, std::span<const std::size_t> ia,
                             std::span<const double> b, std::span<const std::size_t> ib,
                             std::span<const double> c, std::span<const std::size_t> ic,
                             std::span<const double> d, std::span<const std::size_t> id);

/// d[j] = cost[j] − Σ_i y[i]·A[i][j] for every structural column.
void price_columns(const CscMatrix& a, std::span<const double> y, std::span<const double> cost,
                   std::span<double> d);

double max_abs(std::span<const double> v);

}  // namespace serial

namespace omp {

void scatter_add(std::span<const double> src, std::span<const std::size_t> idx, std::span<double> out);
void scatter_add_weighted(std::span<const double> src, std::span<const double> weight,
                          std::span<const std::size_t> idx, std::span<double> out);
double max_bilinear_residual(std::span<const double> a, std::span<const std::size_t> ia,
                             std::span<const double> b, std::span<const std::size_t> ib,
                             std::span<const double> c, std::span<const std::size_t> ic,
                             std::span<const double> d, std::span<const std::size_t> id);
void price_columns(const CscMatrix& a, std::span<const double> y, std::span<const double> cost,
                   std::span<double> d);
double max_abs(std::span<const double> v);

}  // namespace omp

/// True when the library was built with OpenMP.
bool openmp_enabled();
int max_threads();

/// Below this many elements the dispatchers stay serial.
inline constexpr std::size_t kParallelThreshold = 1u << 14;

inline void scatter_add(std::span<const double> src, std::span<const std::size_t> idx,
                        std::span<double> out) {
  if (src.size() >= kParallelThreshold) omp::scatter_add(src, idx, out);
  else serial::scatter_add(src, idx, out);
}

inline void scatter_add_weighted(std::span<const double> src, std::span<const double> weight,
                                 std::span<const std::size_t> idx, std::span<double> out) {
  if (src.size() >= kParallelThreshold) omp::scatter_add_weighted(src, weight, idx, out);
  else serial::scatter_add_weighted(src, weight, idx, out);
}

inline double max_bilinear_residual(std::span<const double> a, std::span<const std::size_t> ia,
                                    std::span<const double> b, std::span<const std::size_t> ib,
                                    std::span<const double> c, std::span<const std::size_t> ic,
                                    std::span<const double> d, std::span<const std::size_t> id) {
  if (ia.size() >= kParallelThreshold) return omp::max_bilinear_residual(a, ia, b, ib, c, ic, d, id);
  return serial::max_bilinear_residual(a, ia, b, ib, c, ic, d, id);
}

inline double max_abs(std::span<const double> v) {
  return v.size() >= kParallelThreshold ? omp::max_abs(v) : serial::max_abs(v);
}

}  // namespace mcmot::kernels
