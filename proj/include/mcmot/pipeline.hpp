#pragma once

#include <cstdint>
#include <string>

#include "mcmot/calibration.hpp"
#include "mcmot/marginals.hpp"
#include "mcmot/payoffs.hpp"
#include "mcmot/ratio.hpp"
#include "mcmot/synthetic.hpp"

namespace mcmot {

/// One calibrate -> bound instance built from two synthetic option chains.
struct PipelineInstance {
  std::string label;
  MarginalSystem system;
  PayoffSpec payoff;
  double calibration_objective_x = 0.0;
  double calibration_objective_y = 0.0;
};

struct PipelineShape {
  synthetic::ChainShape chain{2, 2, 3, 0.01, 100.0, 0.02};
  double y_spot = 50.0;
};

/// Deterministic in (seed, index). Marginals are the calibrated laws at the
/// first-maturity forward of each asset; the payoff is an at-the-money basket
/// Asian call.
PipelineInstance synthetic_pipeline_instance(std::uint64_t seed, int index, const PipelineShape& shape = {});

/// MOT and McCormick (default bounds) in both directions.
RatioRecord ratio_record(const std::string& label, const MarginalSystem& system, const PayoffSpec& payoff,
                         const lp::SolverConfig& config = lp::config_from_env());

}  // namespace mcmot
