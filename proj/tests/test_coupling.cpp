#include <random>

#include "doctest.h"
#include "mcmot/coupling.hpp"
#include "mcmot/error.hpp"
#include "mcmot/kernels.hpp"
#include "mcmot/synthetic.hpp"

using namespace mcmot;

namespace {

std::vector<double> random_table(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// Brute-force projection by explicit enumeration of the full grid.
std::vector<double> brute_project(const CouplingTensor& c, const std::vector<std::size_t>& axes) {
  const Shape full = c.shape();
  Shape sub;
  for (auto a : axes) sub.push_back(full[a]);
  std::vector<double> out(element_count(sub), 0.0);
  MultiIndex mi;
  for (std::size_t k = 0; k < c.masses().size(); ++k) {
    unflatten(k, full, mi);
    std::vector<std::size_t> s;
    for (auto a : axes) s.push_back(mi[a]);
    out[flatten(s, sub)] += c.masses()[k];
  }
  return out;
}

}  // namespace

TEST_CASE("kept axes follow the family definitions") {
  CHECK(kept_axes({ProjectionKind::XPrefix, 1}, 2) == std::vector<std::size_t>{0});
  CHECK(kept_axes({ProjectionKind::XFullWithYt, 1}, 2) == std::vector<std::size_t>{0, 1, 2});
  CHECK(kept_axes({ProjectionKind::YFullWithXt, 2}, 2) == std::vector<std::size_t>{1, 2, 3});
  CHECK(kept_axes({ProjectionKind::YPrefixWithXt, 1}, 2) == std::vector<std::size_t>{0, 2});
  CHECK(kept_axes({ProjectionKind::All, 0}, 2).size() == 4);
  CHECK_THROWS_AS(kept_axes({ProjectionKind::XPrefix, 3}, 2), Error);
  for (int k = 0; k <= static_cast<int>(ProjectionKind::All); ++k) {
    auto kind = static_cast<ProjectionKind>(k);
    CHECK(kind_from_name(kind_name(kind)) == kind);
    CHECK(mirror(mirror(kind)) == kind);
  }
}

TEST_CASE("worked example: independent coupling is bicausal and martingale") {
  const auto sys = synthetic::worked_example();
  const auto c = independent_martingale_coupling(sys);
  CHECK(c.masses().size() == 81);
  CHECK(martingale_residual(c) <= 1e-9);
  CHECK(causality_residual(c, 1) <= 1e-9);
  CHECK(anticausality_residual(c, 1) <= 1e-9);
  auto x1 = project(c, {ProjectionKind::SingleX, 1});
  for (std::size_t i = 0; i < 3; ++i) CHECK(x1.values[i] == doctest::Approx(sys.law(Asset::X, 1).masses()[i]));
  auto x2 = project(c, {ProjectionKind::SingleX, 2});
  CHECK(x2.values[0] == doctest::Approx(0.1));
  CHECK(x2.values[1] == doctest::Approx(0.8));
  CHECK(x2.values[2] == doctest::Approx(0.1));
  auto all = project(c, {ProjectionKind::All, 0});
  CHECK(all.values == c.masses());
}

TEST_CASE("martingale law for the worked example X laws") {
  const auto sys = synthetic::worked_example();
  auto law = build_martingale_law(sys.of(Asset::X));
  CHECK(law.shape == Shape{3, 3});
  CHECK(path_martingale_residual(law, sys.of(Asset::X)) <= 1e-9);
  for (std::size_t i = 0; i < 3; ++i) {
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      row += law.masses[i * 3 + j];
      col += law.masses[j * 3 + i];
    }
    CHECK(row == doctest::Approx(sys.law(Asset::X, 1).masses()[i]));
    CHECK(col == doctest::Approx(sys.law(Asset::X, 2).masses()[i]));
  }
  auto single = build_martingale_law({MarginalLaw({5, 7}, {0.5, 0.5})});
  CHECK(single.masses == std::vector<double>{0.5, 0.5});
  auto points = build_martingale_law({MarginalLaw({4}, {1.0}), MarginalLaw({4}, {1.0})});
  CHECK(points.masses[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(build_martingale_law({MarginalLaw({0, 20}, {0.5, 0.5}), MarginalLaw({10}, {1.0})}), Error);
}

TEST_CASE("degenerate and single-maturity systems") {
  MarginalSystem pts({MarginalLaw({3}, {1.0}), MarginalLaw({3}, {1.0})},
                     {MarginalLaw({8}, {1.0}), MarginalLaw({8}, {1.0})});
  auto c = independent_martingale_coupling(pts);
  CHECK(c.masses().size() == 1);
  CHECK(c.masses()[0] == doctest::Approx(1.0));
  CHECK(max_bicausal_residual(c) == 0.0);

  MarginalSystem one({MarginalLaw({1, 2}, {0.25, 0.75})}, {MarginalLaw({5, 6, 7}, {0.2, 0.3, 0.5})});
  auto p = independent_martingale_coupling(one);
  CHECK(p.masses()[1 * 3 + 2] == doctest::Approx(0.75 * 0.5));
  CHECK(martingale_residual(p) == 0.0);
}

TEST_CASE("constructed martingale violation is 11 times the history mass") {
  const auto sys = synthetic::worked_example();
  // X1=9 always goes to X2=20; Y frozen at Y1=20 -> Y2=20.
  auto grid = ProductGrid::of(sys);
  std::vector<double> m(grid.size(), 0.0);
  m[flatten(std::vector<std::size_t>{0, 2, 1, 1}, grid.shape())] = 0.2;
  m[flatten(std::vector<std::size_t>{1, 1, 1, 1}, grid.shape())] = 0.8;
  CouplingTensor c(grid, m);
  CHECK(martingale_residual(c) == doctest::Approx(11.0 * 0.2));
}

TEST_CASE("one-sided violations on a 2x2x2x2 grid") {
  MarginalSystem sys({MarginalLaw({1, 2}, {0.5, 0.5}), MarginalLaw({0, 3}, {0.5, 0.5})},
                     {MarginalLaw({1, 2}, {0.5, 0.5}), MarginalLaw({0, 3}, {0.5, 0.5})});
  auto grid = ProductGrid::of(sys);

  // Y1 copies X2: Y's past sees X's future.
  std::vector<double> m(grid.size(), 0.0);
  for (std::size_t i1 = 0; i1 < 2; ++i1)
    for (std::size_t j1 = 0; j1 < 2; ++j1)
      for (std::size_t j2 = 0; j2 < 2; ++j2)
        m[flatten(std::vector<std::size_t>{i1, j1, j1, j2}, grid.shape())] += 0.125;
  CouplingTensor c(grid, m);
  CHECK(causality_residual(c, 1) == doctest::Approx(0.0625));
  CHECK(anticausality_residual(c, 1) <= 1e-12);

  // X1 copies Y2: X's past sees Y's future.
  std::vector<double> w(grid.size(), 0.0);
  for (std::size_t i2 = 0; i2 < 2; ++i2)
    for (std::size_t j1 = 0; j1 < 2; ++j1)
      for (std::size_t j2 = 0; j2 < 2; ++j2)
        w[flatten(std::vector<std::size_t>{j2, i2, j1, j2}, grid.shape())] += 0.125;
  CouplingTensor d(grid, w);
  CHECK(causality_residual(d, 1) <= 1e-12);
  CHECK(anticausality_residual(d, 1) == doctest::Approx(0.0625));
}

TEST_CASE("test-function gap vanishes on causal couplings") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    auto sys = synthetic::random_system(rng, {2, 3});
    auto c = independent_martingale_coupling(sys);
    REQUIRE(causality_residual(c, 1) <= 1e-12);
    const Shape full = c.shape();
    for (int t = 1; t <= 2; ++t) {
      std::size_t hy = 1;
      for (auto a : kept_axes({ProjectionKind::YPrefix, t}, 2)) hy *= full[a];
      std::size_t gx = full[0] * full[1];
      for (int k = 0; k < 10; ++k) {
        auto h = random_table(rng, hy);
        auto g = random_table(rng, gx);
        CHECK(std::abs(testfunction_causality_gap(c, t, h, g)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("test-function gap detects non-causal couplings and ignores prefix-only g") {
  MarginalSystem sys({MarginalLaw({1, 2}, {0.5, 0.5}), MarginalLaw({0, 3}, {0.5, 0.5})},
                     {MarginalLaw({1, 2}, {0.5, 0.5}), MarginalLaw({0, 3}, {0.5, 0.5})});
  auto grid = ProductGrid::of(sys);
  std::vector<double> m(grid.size(), 0.0);
  for (std::size_t i1 = 0; i1 < 2; ++i1)
    for (std::size_t j1 = 0; j1 < 2; ++j1)
      for (std::size_t j2 = 0; j2 < 2; ++j2)
        m[flatten(std::vector<std::size_t>{i1, j1, j1, j2}, grid.shape())] += 0.125;
  CouplingTensor c(grid, m);
  // h = indicator of y1 = first point, g = indicator of x2 = first point.
  std::vector<double> h{1.0, 0.0}, g{1.0, 0.0, 1.0, 0.0};
  CHECK(std::abs(testfunction_causality_gap(c, 1, h, g)) > 0.05);
  std::vector<double> g_prefix{0.3, 0.3, -2.0, -2.0};
  CHECK(std::abs(testfunction_causality_gap(c, 1, h, g_prefix)) <= 1e-15);
  CHECK_THROWS_AS(testfunction_causality_gap(c, 1, std::vector<double>{1.0}, g), Error);
}

TEST_CASE("projection is linear and consistent across families") {
  std::mt19937_64 rng(99);
  auto sys = synthetic::random_system(rng, {3, 3});
  auto grid = ProductGrid::of(sys);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto make = [&] {
    std::vector<double> v(grid.size());
    double s = 0.0;
    for (double& x : v) s += (x = u(rng));
    for (double& x : v) x /= s;
    return CouplingTensor(grid, v);
  };
  auto p = make(), q = make();
  const double a = 0.3, b = 0.7;
  std::vector<double> mix(grid.size());
  for (std::size_t k = 0; k < mix.size(); ++k) mix[k] = a * p.masses()[k] + b * q.masses()[k];
  CouplingTensor r(grid, mix);
  for (int k = 0; k < static_cast<int>(ProjectionKind::All); ++k) {
    ProjectionKey key{static_cast<ProjectionKind>(k), 1};
    auto pr = project(r, key), pp = project(p, key), pq = project(q, key);
    auto brute = brute_project(r, pr.axes);
    double total = 0.0;
    for (std::size_t i = 0; i < pr.values.size(); ++i) {
      CHECK(pr.values[i] == doctest::Approx(a * pp.values[i] + b * pq.values[i]).epsilon(1e-12));
      CHECK(pr.values[i] == doctest::Approx(brute[i]).epsilon(1e-12));
      total += pr.values[i];
    }
    CHECK(total == doctest::Approx(1.0));
  }
  // X-prefix(1) from X-full by summing the tail.
  auto full = project(p, {ProjectionKind::XFull, 0});
  auto pre = project(p, {ProjectionKind::XPrefix, 1});
  auto tail = project_raw(full.values, full.shape, std::vector<std::size_t>{0});
  for (std::size_t i = 0; i < pre.values.size(); ++i) CHECK(pre.values[i] == doctest::Approx(tail[i]));
}

TEST_CASE("bilinear residual agrees with a brute-force evaluation") {
  std::mt19937_64 rng(5);
  auto sys = synthetic::random_system(rng, {2, 3});
  auto grid = ProductGrid::of(sys);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(grid.size());
  double s = 0.0;
  for (double& x : v) s += (x = u(rng));
  for (double& x : v) x /= s;
  CouplingTensor c(grid, v);
  const Shape sh = c.shape();
  auto xy = brute_project(c, {0, 1, 2});
  auto x1 = brute_project(c, {0});
  auto x1y = brute_project(c, {0, 2});
  auto xf = brute_project(c, {0, 1});
  double worst = 0.0;
  for (std::size_t i = 0; i < sh[0]; ++i)
    for (std::size_t j = 0; j < sh[1]; ++j)
      for (std::size_t k = 0; k < sh[2]; ++k)
        worst = std::max(worst, std::abs(xy[(i * sh[1] + j) * sh[2] + k] * x1[i] -
                                         x1y[i * sh[2] + k] * xf[i * sh[1] + j]));
  CHECK(causality_residual(c, 1) == doctest::Approx(worst).epsilon(1e-12));
  CHECK(worst > 0.0);
  CHECK_THROWS_AS(causality_residual(c, 2), Error);
}

TEST_CASE("bicausal couplings satisfy both martingale forms") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    auto sys = synthetic::random_system(rng);
    auto c = independent_martingale_coupling(sys);
    CHECK(max_bicausal_residual(c) <= 1e-10);
    CHECK(martingale_residual(c) <= 1e-9);
    CHECK(individual_martingale_residual(c) <= 1e-9);
  }
}

TEST_CASE("from_solver clamps round-off and rejects garbage") {
  const auto sys = synthetic::worked_example();
  auto c = independent_martingale_coupling(sys);
  std::vector<double> v = c.masses();
  v[0] -= 1e-9;
  v[1] += 1e-9;
  v[2] = -1e-12;
  auto d = CouplingTensor::from_solver(ProductGrid::of(sys), v);
  for (double x : d.masses()) CHECK(x >= 0.0);
  v[3] = -0.5;
  CHECK_THROWS_AS(CouplingTensor::from_solver(ProductGrid::of(sys), v), Error);
  CHECK_THROWS_AS(CouplingTensor(ProductGrid::of(sys), std::vector<double>(81, 0.5)), Error);
}

TEST_CASE("serial and OpenMP kernels agree") {
  std::mt19937_64 rng(3);
  const std::size_t n = 100000, bins = 257;
  auto src = random_table(rng, n);
  auto w = random_table(rng, n);
  std::vector<std::size_t> idx(n);
  for (std::size_t k = 0; k < n; ++k) idx[k] = (k * 7919) % bins;
  std::vector<double> a(bins, 0.0), b(bins, 0.0), c(bins, 0.0), d(bins, 0.0);
  kernels::serial::scatter_add(src, idx, a);
  kernels::omp::scatter_add(src, idx, b);
  kernels::serial::scatter_add_weighted(src, w, idx, c);
  kernels::omp::scatter_add_weighted(src, w, idx, d);
  for (std::size_t k = 0; k < bins; ++k) {
    CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
    CHECK(c[k] == doctest::Approx(d[k]).epsilon(1e-12));
  }
  auto t1 = random_table(rng, bins), t2 = random_table(rng, bins);
  std::vector<std::size_t> i2(n);
  for (std::size_t k = 0; k < n; ++k) i2[k] = (k * 31) % bins;
  CHECK(kernels::serial::max_bilinear_residual(t1, idx, t2, i2, t2, idx, t1, i2) ==
        kernels::omp::max_bilinear_residual(t1, idx, t2, i2, t2, idx, t1, i2));
  CHECK(kernels::serial::max_abs(src) == kernels::omp::max_abs(src));

  kernels::CscMatrix m;
  m.rows = 50;
  m.cols = 3000;
  m.start.push_back(0);
  for (int j = 0; j < m.cols; ++j) {
    for (int r = 0; r < 3; ++r) {
      m.index.push_back((j * 13 + r * 7) % m.rows);
      m.value.push_back(0.1 * (r + 1) - 0.05 * (j % 5));
    }
    m.start.push_back(static_cast<int>(m.index.size()));
  }
  auto y = random_table(rng, m.rows);
  auto cost = random_table(rng, m.cols);
  std::vector<double> d1(m.cols), d2(m.cols);
  kernels::serial::price_columns(m, y, cost, d1);
  kernels::omp::price_columns(m, y, cost, d2);
  CHECK(d1 == d2);
}
