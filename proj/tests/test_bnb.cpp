#include <chrono>
#include <random>

#include "bicausal_oracle.hpp"
#include "doctest.h"
#include "mcmot/bnb.hpp"
#include "mcmot/error.hpp"
#include "mcmot/synthetic.hpp"

using namespace mcmot;

namespace {

McCormickInstance example(lp::Direction dir) {
  auto sys = synthetic::worked_example();
  return {sys, PayoffSpec::max_squared_increment(), default_bounds(sys), dir};
}

McCormickInstance random_instance(std::mt19937_64& rng, lp::Direction dir) {
  auto sys = synthetic::random_system(rng);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  auto grid = ProductGrid::of(sys);
  std::vector<double> vals(grid.size());
  for (double& v : vals) v = u(rng);
  return {sys, PayoffSpec::table(grid.shape(), vals), default_bounds(sys), dir};
}

}  // namespace

TEST_CASE("worked example bicausal bounds") {
  auto start = std::chrono::steady_clock::now();
  auto lo = solve_bicausal(example(lp::Direction::Minimize));
  auto hi = solve_bicausal(example(lp::Direction::Maximize));
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(lo.terminated == Termination::GapClosed);
  CHECK(hi.terminated == Termination::GapClosed);
  CHECK(lo.lower_bound == doctest::Approx(21.6444).epsilon(0.0004));
  CHECK(lo.upper_bound - lo.lower_bound <= 1e-3);
  CHECK(hi.upper_bound == doctest::Approx(24.40).epsilon(0.0004));
  CHECK(hi.upper_bound - hi.lower_bound <= 1e-3);
  CHECK(lo.root_relaxation == doctest::Approx(21.50).epsilon(0.0004));
  CHECK(secs < 300.0);
  for (const auto* r : {&lo, &hi}) {
    REQUIRE(r->incumbent.has_value());
    CHECK(r->max_residual_of_incumbent <= 1e-8);
    CHECK(r->incumbent_martingale_residual <= 1e-8);
    CHECK(individual_martingale_residual(*r->incumbent) <= 1e-6);
  }
}

TEST_CASE("constant payoff closes at the root") {
  auto sys = synthetic::worked_example();
  auto r = solve_bicausal({sys, PayoffSpec::constant_value(3.5), default_bounds(sys), lp::Direction::Minimize});
  CHECK(r.nodes_explored <= 1);
  CHECK(r.lower_bound == doctest::Approx(3.5));
  CHECK(r.upper_bound == doctest::Approx(3.5));
  CHECK(r.terminated == Termination::GapClosed);
}

TEST_CASE("repair leaves bicausal couplings alone and fixes the relaxed optimum") {
  auto inst = example(lp::Direction::Minimize);
  auto ind = independent_martingale_coupling(inst.system);
  auto same = repair_incumbent(ind, inst);
  REQUIRE(same.has_value());
  CHECK(same->coupling.masses() == ind.masses());
  CHECK(same->iterations == 0);

  MarginalSystem pts({MarginalLaw({3}, {1.0}), MarginalLaw({3}, {1.0})},
                     {MarginalLaw({8}, {1.0}), MarginalLaw({8}, {1.0})});
  McCormickInstance single{pts, PayoffSpec::basket_asian_call(1.0), default_bounds(pts), lp::Direction::Minimize};
  auto one = repair_incumbent(independent_martingale_coupling(pts), single);
  REQUIRE(one.has_value());
  CHECK(one->coupling.masses() == std::vector<double>{1.0});

  auto mc = solve_mccormick(inst);
  auto fixed = repair_incumbent(mc.coupling, inst);
  REQUIRE(fixed.has_value());
  CHECK(fixed->value >= 21.50 - 1e-9);
  CHECK(fixed->value <= 21.65);
  CHECK(max_bicausal_residual(fixed->coupling) <= 1e-8);
  CHECK(martingale_residual(fixed->coupling) <= 1e-8);
}

TEST_CASE("branching picks the maximal score and refuses when nothing is violated") {
  auto inst = example(lp::Direction::Minimize);
  auto payoff = tabulate(inst.payoff, inst.system);
  auto box = inst.bounds;
  auto prog = build_mccormick_program(inst.system, payoff, box, inst.direction);
  auto sol = lp::solve(prog.lp);
  REQUIRE(sol.status == lp::Status::Optimal);
  auto choice = select_branch(prog, sol, box, 1e-8);
  REQUIRE(choice.has_value());
  CHECK(choice->key.t <= 1);

  // Brute-force the score of every factor and compare.
  double best = 0.0;
  for (const auto& blk : prog.envelopes)
    for (std::size_t p = 0; p < blk.points; ++p) {
      const auto& x = sol.primal;
      auto val = [&](const ProjectionKey& k, std::size_t e) { return x[prog.aux_first.at(k) + e]; };
      double a = val(blk.key_a, p), b = val(blk.key_b, blk.ib[p]), c = val(blk.key_c, blk.ic[p]),
             d = val(blk.key_d, blk.id[p]);
      double viol = std::abs(a * b - c * d);
      if (viol <= 1e-8) continue;
      auto w = [&](const ProjectionKey& k, std::size_t e) { return box.at(k).upper[e] - box.at(k).lower[e]; };
      double gap = envelope_gap(a, box.at(blk.key_a).lower[p], box.at(blk.key_a).upper[p], b,
                                box.at(blk.key_b).lower[blk.ib[p]], box.at(blk.key_b).upper[blk.ib[p]], c,
                                box.at(blk.key_c).lower[blk.ic[p]], box.at(blk.key_c).upper[blk.ic[p]], d,
                                box.at(blk.key_d).lower[blk.id[p]], box.at(blk.key_d).upper[blk.id[p]]);
      double dw = 1e-6;
      for (int r = 0; r < 8; ++r) dw += std::abs(sol.duals[blk.row_first + 8 * static_cast<int>(p) + r]);
      best = std::max(best, w(blk.key_a, p) * w(blk.key_b, blk.ib[p]) * dw * (gap + viol));
      best = std::max(best, w(blk.key_c, blk.ic[p]) * w(blk.key_d, blk.id[p]) * dw * (gap + viol));
    }
  CHECK(choice->score == doctest::Approx(best).epsilon(1e-12));

  BnBNode node;
  node.box = box;
  node.solution = sol;
  auto kids = branch(node, prog, 1e-8);
  REQUIRE(kids.has_value());
  const auto& l = kids->first.box.at(choice->key);
  const auto& r = kids->second.box.at(choice->key);
  CHECK(l.upper[choice->entry] == doctest::Approx(choice->split));
  CHECK(r.lower[choice->entry] == doctest::Approx(choice->split));
  CHECK(l.lower[choice->entry] == box.at(choice->key).lower[choice->entry]);
  CHECK(r.upper[choice->entry] == box.at(choice->key).upper[choice->entry]);
  const double width = box.at(choice->key).upper[choice->entry] - box.at(choice->key).lower[choice->entry];
  CHECK(choice->split >= box.at(choice->key).lower[choice->entry] + 0.1 * width - 1e-15);
  CHECK(choice->split <= box.at(choice->key).upper[choice->entry] - 0.1 * width + 1e-15);

  // A bicausal relaxation optimum leaves nothing to split.
  auto ind = independent_martingale_coupling(inst.system);
  auto pinned = build_mccormick_program(inst.system, payoff, box, inst.direction);
  for (std::size_t k = 0; k < ind.masses().size(); ++k)
    pinned.lp.set_bounds(static_cast<int>(k), ind.masses()[k], ind.masses()[k]);
  auto psol = lp::solve(pinned.lp);
  REQUIRE(psol.status == lp::Status::Optimal);
  CHECK_FALSE(select_branch(pinned, psol, box, 1e-8).has_value());
}

TEST_CASE("single violated point forces the split there") {
  // One-point grids except a two-point X2: only one bilinear point can be violated.
  MarginalSystem sys({MarginalLaw({5}, {1.0}), MarginalLaw({4, 6}, {0.5, 0.5})},
                     {MarginalLaw({7}, {1.0}), MarginalLaw({7}, {1.0})});
  auto box = default_bounds(sys);
  std::vector<double> payoff{1.0, 2.0};
  auto prog = build_mccormick_program(sys, payoff, box, lp::Direction::Minimize);
  auto sol = lp::solve(prog.lp);
  REQUIRE(sol.status == lp::Status::Optimal);
  // Every coupling here is forced and bicausal.
  CHECK_FALSE(select_branch(prog, sol, box, 1e-8).has_value());
}

TEST_CASE("determinism and bound validity on random systems") {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 6; ++trial) {
    for (auto dir : {lp::Direction::Minimize, lp::Direction::Maximize}) {
      auto inst = random_instance(rng, dir);
      BnBConfig cfg;
      cfg.node_budget = 400;
      auto a = solve_bicausal(inst, cfg);
      auto b = solve_bicausal(inst, cfg);
      CHECK(a.nodes_explored == b.nodes_explored);
      CHECK(a.lower_bound == b.lower_bound);
      CHECK(a.upper_bound == b.upper_bound);
      CHECK(a.lower_bound <= a.upper_bound + 1e-9);

      auto mc = solve_mccormick(inst);
      const double sign = dir == lp::Direction::Minimize ? 1.0 : -1.0;
      const double bnb_bound = dir == lp::Direction::Minimize ? a.lower_bound : a.upper_bound;
      CHECK(sign * mc.value <= sign * bnb_bound + 1e-6);

      auto payoff = tabulate(inst.payoff, inst.system);
      double o = oracle::best_bicausal_value(inst.system, payoff, dir, 5, 7 + trial);
      REQUIRE_FALSE(std::isnan(o));
      // Oracle values are bicausal-feasible: never better than the certified bound.
      CHECK(sign * o >= sign * bnb_bound - 1e-4);
      REQUIRE(a.incumbent.has_value());
      CHECK(individual_martingale_residual(*a.incumbent) <= 1e-6);
    }
  }
}

TEST_CASE("parallel workers reach the same certified interval") {
  auto seq = solve_bicausal(example(lp::Direction::Minimize));
  BnBConfig cfg;
  cfg.workers = 2;
  auto par = solve_bicausal(example(lp::Direction::Minimize), cfg);
  CHECK(par.lower_bound == doctest::Approx(seq.lower_bound).epsilon(1e-3));
  CHECK(par.upper_bound == doctest::Approx(seq.upper_bound).epsilon(1e-3));
}
