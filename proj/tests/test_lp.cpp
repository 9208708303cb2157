#include <Eigen/Dense>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mcmot/error.hpp"
#include "mcmot/lp.hpp"

using namespace mcmot::lp;

TEST_CASE("one-variable LP binds the lower row") {
  LinearProgram lp;
  int x = lp.add_var(-kInf, kInf, 1.0);
  lp.add_row({{x, 1.0}}, Sense::GreaterEqual, 3.0);
  lp.add_row({{x, 1.0}}, Sense::LessEqual, 10.0);
  auto sol = solve(lp);
  REQUIRE(sol.status == Status::Optimal);
  CHECK(sol.objective_value == doctest::Approx(3.0));
  CHECK(sol.duals[0] == doctest::Approx(1.0));
  CHECK(sol.duals[1] == doctest::Approx(0.0));
  CHECK(duality_gap(sol, lp) <= 1e-9);
}

TEST_CASE("textbook maximization with known duals") {
  // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6), duals (0, 1.5, 1)
  LinearProgram lp;
  lp.direction = Direction::Maximize;
  int x = lp.add_var(0, kInf, 3.0);
  int y = lp.add_var(0, kInf, 5.0);
  lp.add_row({{x, 1}}, Sense::LessEqual, 4);
  lp.add_row({{y, 2}}, Sense::LessEqual, 12);
  lp.add_row({{x, 3}, {y, 2}}, Sense::LessEqual, 18);
  auto sol = solve(lp);
  REQUIRE(sol.status == Status::Optimal);
  CHECK(sol.objective_value == doctest::Approx(36.0));
  CHECK(sol.primal[x] == doctest::Approx(2.0));
  CHECK(sol.primal[y] == doctest::Approx(6.0));
  CHECK(sol.duals[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(sol.duals[1] == doctest::Approx(1.5));
  CHECK(sol.duals[2] == doctest::Approx(1.0));
  CHECK(duality_gap(sol, lp) <= 1e-9);
}

TEST_CASE("infeasible and unbounded programs are reported") {
  LinearProgram bad;
  int x = bad.add_var(-kInf, kInf, 1.0);
  bad.add_row({{x, 1}}, Sense::GreaterEqual, 1);
  bad.add_row({{x, 1}}, Sense::LessEqual, 0);
  auto s1 = solve(bad);
  CHECK(s1.status == Status::Infeasible);
  CHECK_FALSE(s1.infeasible_rows.empty());
  CHECK_THROWS_AS(duality_gap(s1, bad), mcmot::Error);

  LinearProgram open;
  int z = open.add_var(0, kInf, -1.0);
  open.add_row({{z, 1}}, Sense::GreaterEqual, 2);
  CHECK(solve(open).status == Status::Unbounded);
}

TEST_CASE("objective-only feasibility LP has zero gap") {
  LinearProgram lp;
  int a = lp.add_var(0, 1);
  int b = lp.add_var(0, 1);
  lp.add_row({{a, 1}, {b, 1}}, Sense::Equal, 1);
  auto sol = solve(lp);
  REQUIRE(sol.status == Status::Optimal);
  CHECK(duality_gap(sol, lp) == doctest::Approx(0.0));
}

TEST_CASE("bounded variables flip without pivoting") {
  LinearProgram lp;
  lp.direction = Direction::Maximize;
  int a = lp.add_var(0, 2, 1.0);
  int b = lp.add_var(-1, 3, 2.0);
  lp.add_row({{a, 1}, {b, 1}}, Sense::LessEqual, 100);
  auto sol = solve(lp);
  REQUIRE(sol.status == Status::Optimal);
  CHECK(sol.objective_value == doctest::Approx(8.0));
  CHECK(sol.reduced_costs[a] == doctest::Approx(1.0));
  CHECK(duality_gap(sol, lp) <= 1e-9);
}

TEST_CASE("invalid programs are rejected") {
  LinearProgram lp;
  lp.add_var(1, 0);
  CHECK_THROWS_AS(solve(lp), mcmot::Error);
  LinearProgram lp2;
  lp2.add_var(0, 1);
  lp2.add_row({{3, 1.0}}, Sense::Equal, 0);
  CHECK_THROWS_AS(solve(lp2), mcmot::Error);
}

namespace {

// Brute-force oracle: enumerate every vertex of {Ax <= b, 0 <= x <= 1} in R^3.
double vertex_enumeration_min(const std::vector<std::array<double, 4>>& rows, const std::array<double, 3>& c) {
  std::vector<std::array<double, 4>> all = rows;  // a0 a1 a2 | b  with a·x <= b
  for (int k = 0; k < 3; ++k) {
    std::array<double, 4> lo{0, 0, 0, 0}, hi{0, 0, 0, 1};
    lo[k] = -1;
    hi[k] = 1;
    all.push_back(lo);
    all.push_back(hi);
  }
  double best = mcmot::lp::kInf;
  const int n = static_cast<int>(all.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        Eigen::Matrix3d m;
        Eigen::Vector3d r;
        for (int q = 0; q < 3; ++q) {
          m(0, q) = all[i][q];
          m(1, q) = all[j][q];
          m(2, q) = all[k][q];
        }
        r << all[i][3], all[j][3], all[k][3];
        Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
        if (lu.rank() < 3) continue;
        Eigen::Vector3d x = lu.solve(r);
        bool ok = true;
        for (const auto& row : all)
          if (row[0] * x[0] + row[1] * x[1] + row[2] * x[2] > row[3] + 1e-9) ok = false;
        if (ok) best = std::min(best, c[0] * x[0] + c[1] * x[1] + c[2] * x[2]);
      }
  return best;
}

}  // namespace

TEST_CASE("random small LPs agree with vertex enumeration") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::array<double, 4>> rows(4);
    for (auto& r : rows) r = {coef(rng), coef(rng), coef(rng), 0.3 + 0.5 * coef(rng)};
    std::array<double, 3> c{coef(rng), coef(rng), coef(rng)};
    double oracle = vertex_enumeration_min(rows, c);

    LinearProgram lp;
    for (int k = 0; k < 3; ++k) lp.add_var(0, 1, c[k]);
    for (const auto& r : rows) lp.add_row({{0, r[0]}, {1, r[1]}, {2, r[2]}}, Sense::LessEqual, r[3]);
    auto sol = solve(lp);
    if (!std::isfinite(oracle)) {
      CHECK(sol.status == Status::Infeasible);
      continue;
    }
    REQUIRE(sol.status == Status::Optimal);
    CHECK(sol.objective_value == doctest::Approx(oracle).epsilon(1e-8));
    CHECK(duality_gap(sol, lp) <= 1e-6 * (1 + std::abs(sol.objective_value)));
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("objective scaling and redundant rows leave the optimum unchanged") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    LinearProgram lp;
    const int n = 6;
    for (int j = 0; j < n; ++j) lp.add_var(0, kInf, u(rng) - 0.3);
    std::vector<Term> sum;
    for (int j = 0; j < n; ++j) sum.push_back({j, 1.0});
    lp.add_row(sum, Sense::Equal, 1.0);
    std::vector<Term> r2, r3;
    for (int j = 0; j < n; ++j) {
      r2.push_back({j, u(rng)});
      r3.push_back({j, u(rng)});
    }
    lp.add_row(r2, Sense::LessEqual, 0.6);
    lp.add_row(r3, Sense::GreaterEqual, 0.2);
    auto base = solve(lp);
    REQUIRE(base.status == Status::Optimal);

    LinearProgram scaled = lp;
    for (int j = 0; j < n; ++j) scaled.set_cost(j, 2.5 * lp.cost(j));
    auto s = solve(scaled);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.objective_value == doctest::Approx(2.5 * base.objective_value).epsilon(1e-9));

    LinearProgram redundant = lp;
    std::vector<Term> combo = sum;
    for (auto t : r2) combo.push_back(t);
    redundant.add_row(combo, Sense::LessEqual, 1.6);
    auto r = solve(redundant);
    REQUIRE(r.status == Status::Optimal);
    CHECK(r.objective_value == doctest::Approx(base.objective_value).epsilon(1e-9));
  }
}

TEST_CASE("warm start reproduces the optimum and MPS export names every row") {
  LinearProgram lp;
  lp.direction = Direction::Maximize;
  int x = lp.add_var(0, kInf, 3.0, "x");
  int y = lp.add_var(0, kInf, 5.0, "y");
  lp.add_row({{x, 1}}, Sense::LessEqual, 4, "cap x");
  lp.add_row({{y, 2}}, Sense::LessEqual, 12);
  lp.add_row({{x, 3}, {y, 2}}, Sense::LessEqual, 18);
  auto cold = solve(lp);
  SolverConfig cfg;
  cfg.warm_basis = cold.basis;
  auto warm = solve(lp, cfg);
  REQUIRE(warm.status == Status::Optimal);
  CHECK(warm.objective_value == doctest::Approx(36.0));
  CHECK(warm.iterations == 0);

  std::ostringstream mps;
  write_mps(lp, mps);
  const std::string text = mps.str();
  CHECK(text.find("OBJSENSE") != std::string::npos);
  CHECK(text.find("cap_x#0") != std::string::npos);
  CHECK(text.find("ENDATA") != std::string::npos);
}
