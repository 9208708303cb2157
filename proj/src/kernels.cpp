#include "mcmot/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mcmot::kernels {

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void scatter_add(std::span<const double> src, std::span<const std::size_t> idx, std::span<double> out) {
  for (std::size_t k = 0; k < src.size(); ++k) out[idx[k]] += src[k];
}

void scatter_add_weighted(std::span<const double> src, std::span<const double> weight,
                          std::span<const std::size_t> idx, std::span<double> out) {
  for (std::size_t k = 0; k < src.size(); ++k) out[idx[k]] += weight[k] * src[k];
}

double max_bilinear_residual(std::span<const double> a, std::span<const std::size_t> ia,
                             std::span<const double> b, std::span<const std::size_t> ib,
                             std::span<const double> c, std::span<const std::size_t> ic,
                             std::span<const double> d, std::span<const std::size_t> id) {
  double worst = 0.0;
  for (std::size_t k = 0; k < ia.size(); ++k)
    worst = std::max(worst, std::abs(a[ia[k]] * b[ib[k]] - c[ic[k]] * d[id[k]]));
  return worst;
}

void price_columns(const CscMatrix& a, std::span<const double> y, std::span<const double> cost,
                   std::span<double> d) {
  for (int j = 0; j < a.cols; ++j) {
    double s = cost[j];
    for (int p = a.start[j]; p < a.start[j + 1]; ++p) s -= y[a.index[p]] * a.value[p];
    d[j] = s;
  }
}

double max_abs(std::span<const double> v) {
  double worst = 0.0;
  for (double x : v) worst = std::max(worst, std::abs(x));
  return worst;
}

}  // namespace serial

namespace omp {

#ifdef _OPENMP

// Each thread accumulates into a private buffer; buffers are summed in thread
// order so the result does not depend on scheduling.
template <class Body>
static void scatter_reduce(std::size_t n, std::span<double> out, Body body) {
  const int nt = omp_get_max_threads();
  std::vector<std::vector<double>> partial(nt, std::vector<double>(out.size(), 0.0));
#pragma omp parallel num_threads(nt)
  {
    auto& mine = partial[omp_get_thread_num()];
#pragma omp for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) body(static_cast<std::size_t>(k), mine);
  }
  for (const auto& buf : partial)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += buf[i];
}

void scatter_add(std::span<const double> src, std::span<const std::size_t> idx, std::span<double> out) {
  scatter_reduce(src.size(), out, [&](std::size_t k, std::vector<double>& buf) { buf[idx[k]] += src[k]; });
}

void scatter_add_weighted(std::span<const double> src, std::span<const double> weight,
                          std::span<const std::size_t> idx, std::span<double> out) {
  scatter_reduce(src.size(), out,
                 [&](std::size_t k, std::vector<double>& buf) { buf[idx[k]] += weight[k] * src[k]; });
}

double max_bilinear_residual(std::span<const double> a, std::span<const std::size_t> ia,
                             std::span<const double> b, std::span<const std::size_t> ib,
                             std::span<const double> c, std::span<const std::size_t> ic,
                             std::span<const double> d, std::span<const std::size_t> id) {
  double worst = 0.0;
  const auto n = static_cast<std::ptrdiff_t>(ia.size());
#pragma omp parallel for reduction(max : worst) schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k)
    worst = std::max(worst, std::abs(a[ia[k]] * b[ib[k]] - c[ic[k]] * d[id[k]]));
  return worst;
}

void price_columns(const CscMatrix& a, std::span<const double> y, std::span<const double> cost,
                   std::span<double> d) {
#pragma omp parallel for schedule(static)
  for (int j = 0; j < a.cols; ++j) {
    double s = cost[j];
    for (int p = a.start[j]; p < a.start[j + 1]; ++p) s -= y[a.index[p]] * a.value[p];
    d[j] = s;
  }
}

double max_abs(std::span<const double> v) {
  double worst = 0.0;
  const auto n = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for reduction(max : worst) schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) worst = std::max(worst, std::abs(v[k]));
  return worst;
}

#else

void scatter_add(std::span<const double> src, std::span<const std::size_t> idx, std::span<double> out) {
  serial::scatter_add(src, idx, out);
}
void scatter_add_weighted(std::span<const double> src, std::span<const double> weight,
                          std::span<const std::size_t> idx, std::span<double> out) {
  serial::scatter_add_weighted(src, weight, idx, out);
}
double max_bilinear_residual(std::span<const double> a, std::span<const std::size_t> ia,
                             std::span<const double> b, std::span<const std::size_t> ib,
                             std::span<const double> c, std::span<const std::size_t> ic,
                             std::span<const double> d, std::span<const std::size_t> id) {
  return serial::max_bilinear_residual(a, ia, b, ib, c, ic, d, id);
}
void price_columns(const CscMatrix& a, std::span<const double> y, std::span<const double> cost,
                   std::span<double> d) {
  serial::price_columns(a, y, cost, d);
}
double max_abs(std::span<const double> v) { return serial::max_abs(v); }

#endif

}  // namespace omp

}  // namespace mcmot::kernels
