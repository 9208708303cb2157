#include <random>

#include "doctest.h"
#include "mcmot/calibration.hpp"
#include "mcmot/error.hpp"
#include "mcmot/synthetic.hpp"

using namespace mcmot;

namespace {

MarketSlice slice(int t, double fwd, double disc, std::vector<std::array<double, 3>> kba) {
  MarketSlice s;
  s.maturity_index = t;
  s.forward = fwd;
  s.discount = disc;
  for (auto [k, b, a] : kba) s.quotes.push_back({t, k, b, a});
  return s;
}

void check_result_invariants(const CalibrationResult& r) {
  CHECK(calibration_martingale_residual(r) <= 1e-8);
  for (const auto& m : r.marginals) CHECK(mean(m) == doctest::Approx(1.0).epsilon(1e-8));
  for (std::size_t t = 0; t + 1 < r.marginals.size(); ++t)
    CHECK(check_convex_order(r.marginals[t], r.marginals[t + 1]).ordered);
}

}  // namespace

TEST_CASE("quote scaling") {
  auto s = scale_quotes(slice(1, 100, 0.99, {{100, 4, 5}}));
  CHECK(s.ask[0] == doctest::Approx(5.0 / 99.0));
  CHECK(s.bid[0] == doctest::Approx(4.0 / 99.0));
  CHECK(s.strike[0] == doctest::Approx(1.0));
  auto id = scale_quotes(slice(1, 1, 1, {{0.8, 0.1, 0.3}}));
  CHECK(id.ask[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(id.bid[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(id.strike[0] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK_THROWS_AS(scale_quotes(slice(1, 0, 1, {{1, 0, 1}})), Error);
}

TEST_CASE("slice validation") {
  CHECK_THROWS_AS(slice(1, 100, 1, {{110, 1, 2}, {90, 5, 6}}).validate(), Error);
  CHECK_THROWS_AS(slice(1, 100, 1, {{100, 3, 2}}).validate(), Error);
  CHECK_THROWS_AS(slice(1, 100, 1.2, {{100, 1, 2}}).validate(), Error);
  CHECK_THROWS_AS(slice(1, -1, 1, {{100, 1, 2}}).validate(), Error);
  CHECK_THROWS_AS(build_calibration_lp({}), Error);
  CHECK_NOTHROW(slice(1, 100, 1, {{90, 10, 11}, {110, 0, 1}}).validate());
}

TEST_CASE("two maturities with three strikes give nine joint masses") {
  auto a = slice(1, 100, 1, {{90, 9, 11}, {100, 3, 5}, {110, 0, 1}});
  auto b = slice(2, 100, 1, {{80, 19, 21}, {100, 5, 7}, {120, 0, 1}});
  auto lp = build_calibration_lp({a, b});
  int mu = 0;
  for (int j = 0; j < lp.num_vars(); ++j) mu += lp.var_label(j).rfind("mu[", 0) == 0;
  CHECK(mu == 9);
}

TEST_CASE("two-point measure priced exactly") {
  // Mean 1 on {0.9, 1.1} forces masses 1/2, 1/2: the 90 call is worth 0.1 scaled.
  auto s = slice(1, 100, 1, {{90, 9.5, 10.5}, {110, 0.0, 0.5}});
  auto r = calibrate({s});
  CHECK(r.objective == doctest::Approx(0.01 + 0.005).epsilon(1e-9));
  CHECK(r.spread_floor == doctest::Approx(0.015));
  CHECK(r.all_quotes_feasible);
  CHECK(r.marginals[0].masses()[0] == doctest::Approx(0.5));
  CHECK(r.fitted_scaled_prices[0][0] == doctest::Approx(0.1));
  check_result_invariants(r);
}

TEST_CASE("point mass at the forward") {
  auto r = calibrate({slice(1, 50, 0.97, {{50, 0, 0}})});
  REQUIRE(r.marginals[0].size() == 1);
  CHECK(r.marginals[0].masses()[0] == doctest::Approx(1.0));
  CHECK(r.objective == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.all_quotes_feasible);
}

TEST_CASE("synthetic round trips recover every quote") {
  std::mt19937_64 rng(99);
  for (double s : {0.01, 0.05}) {
    for (int trial = 0; trial < 8; ++trial) {
      synthetic::ChainShape shape;
      shape.spread = s;
      auto chain = synthetic::random_chain(rng, shape);
      auto r = calibrate(chain.slices);
      std::size_t nq = 0;
      for (const auto& sl : chain.slices) nq += sl.quotes.size();
      CHECK(r.objective == doctest::Approx(2.0 * s * nq).epsilon(1e-7 / (2.0 * s * nq)));
      CHECK(r.all_quotes_feasible);
      check_result_invariants(r);
      for (std::size_t t = 0; t < chain.slices.size(); ++t) {
        const auto sq = scale_quotes(chain.slices[t]);
        for (std::size_t i = 0; i < sq.ask.size(); ++i) {
          const double c = call_value(r.marginals[t], sq.strike[i]);
          CHECK(c >= sq.bid[i] - 1e-7);
          CHECK(c <= sq.ask[i] + 1e-7);
        }
      }
      auto d = feasibility_diagnosis(r, chain.slices);
      for (const auto& q : d.quotes) CHECK(q.distance == 0.0);
    }
  }
}

TEST_CASE("an ask below intrinsic value is flagged") {
  std::mt19937_64 rng(5);
  auto chain = synthetic::random_chain(rng);
  auto slices = chain.slices;
  auto& q = slices[0].quotes[0];
  const double intrinsic = slices[0].discount * std::max(slices[0].forward - q.strike, 0.0);
  REQUIRE(intrinsic > 0.0);
  q.ask = 0.5 * intrinsic;
  q.bid = 0.4 * intrinsic;
  auto r = calibrate(slices);
  CHECK_FALSE(r.all_quotes_feasible);
  CHECK(r.objective > r.spread_floor + 1e-7);
  auto d = feasibility_diagnosis(r, slices);
  CHECK(d.quotes[0].outside);
  double sum_excess = 0.0, sum_dist = 0.0;
  for (const auto& qd : d.quotes) {
    CHECK(qd.outside == (qd.excess > 1e-7));
    CHECK(qd.excess == doctest::Approx(2.0 * qd.distance).epsilon(1e-9));
    sum_excess += qd.excess;
    sum_dist += qd.distance;
  }
  CHECK(std::abs(sum_excess - d.excess) <= 1e-7);
  CHECK(std::abs(2.0 * sum_dist - d.excess) <= 1e-7);
  check_result_invariants(r);
}

TEST_CASE("scaling one maturity leaves the joint unchanged") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 4; ++trial) {
    auto chain = synthetic::random_chain(rng);
    auto base = calibrate(chain.slices);
    for (double lambda : {4.0, 3.0, 0.37}) {
      auto scaled = chain.slices;
      auto& s = scaled[1];
      s.forward *= lambda;
      for (auto& q : s.quotes) {
        q.strike *= lambda;
        q.bid *= lambda;
        q.ask *= lambda;
      }
      for (double& p : s.extra_points) p *= lambda;
      auto r = calibrate(scaled);
      REQUIRE(r.joint.size() == base.joint.size());
      for (std::size_t k = 0; k < r.joint.size(); ++k) CHECK(std::abs(r.joint[k] - base.joint[k]) <= 1e-9);
    }
  }
}

TEST_CASE("no risk-neutral law on the grid is reported by family") {
  auto s = slice(1, 100, 1, {{110, 0, 1}, {120, 0, 1}});
  try {
    calibrate({s});
    FAIL("expected infeasible");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Infeasible);
    CHECK(std::string(e.what()).find("families") != std::string::npos);
  }
}

TEST_CASE("extra support points enter the grid unpriced") {
  auto s = slice(1, 100, 1, {{100, 0, 5}});
  s.extra_points = {80, 130};
  auto r = calibrate({s});
  CHECK(r.marginals[0].size() == 3);
  CHECK(r.all_quotes_feasible);
  auto prices = price_marginals(r, 100.0);
  CHECK(mean(prices[0]) == doctest::Approx(100.0));
  s.extra_points = {100};
  CHECK_THROWS_AS(calibrate({s}), Error);
}
