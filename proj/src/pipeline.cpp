#include "mcmot/pipeline.hpp"

#include <random>

#include "mcmot/mccormick.hpp"
#include "mcmot/mot.hpp"

namespace mcmot {

PipelineInstance synthetic_pipeline_instance(std::uint64_t seed, int index, const PipelineShape& shape) {
  std::seed_seq seq{seed, static_cast<std::uint64_t>(index)};
  std::mt19937_64 rng(seq);
  auto xs = shape.chain;
  auto ys = shape.chain;
  ys.spot = shape.y_spot;
  auto cx = synthetic::random_chain(rng, xs);
  auto cy = synthetic::random_chain(rng, ys);
  auto rx = calibrate(cx.slices, lp::config_from_env(), "X");
  auto ry = calibrate(cy.slices, lp::config_from_env(), "Y");

  PipelineInstance inst;
  inst.label = "synthetic-" + std::to_string(seed) + "-" + std::to_string(index);
  const double fx = cx.slices.front().forward, fy = cy.slices.front().forward;
  inst.system = MarginalSystem(price_marginals(rx, fx), price_marginals(ry, fy));
  inst.payoff = PayoffSpec::basket_asian_call(0.5 * (fx + fy));
  inst.calibration_objective_x = rx.objective;
  inst.calibration_objective_y = ry.objective;
  return inst;
}

RatioRecord ratio_record(const std::string& label, const MarginalSystem& system, const PayoffSpec& payoff,
                         const lp::SolverConfig& config) {
  auto bounds = default_bounds(system);
  const double mot_min = solve_mot({system, payoff, lp::Direction::Minimize}, config).value;
  const double mot_max = solve_mot({system, payoff, lp::Direction::Maximize}, config).value;
  const double mc_min = solve_mccormick({system, payoff, bounds, lp::Direction::Minimize}, config).value;
  const double mc_max = solve_mccormick({system, payoff, bounds, lp::Direction::Maximize}, config).value;
  return make_ratio_record(label, {mot_min, mot_max}, {mc_min, mc_max});
}

}  // namespace mcmot
