#pragma once

#include <array>
#include <string>
#include <vector>

#include "mcmot/coupling.hpp"
#include "mcmot/lp.hpp"
#include "mcmot/marginals.hpp"
#include "mcmot/payoffs.hpp"

namespace mcmot {

struct MotInstance {
  MarginalSystem system;
  PayoffSpec payoff;
  lp::Direction direction = lp::Direction::Minimize;
};

/// Where the coupling columns and the marginal/martingale rows live inside a
/// program. Coupling masses always occupy columns [0, num_pi).
struct MotLayout {
  struct MarginalRow {
    Asset asset;
    int t;
    std::size_t point;
    int row;
  };
  struct MartingaleRow {
    Asset asset;
    int t;
    std::size_t history;  // flat index on the joint history grid (x_{1:t}, y_{1:t})
    int row;
  };

  ProductGrid grid;
  Shape shape;
  std::size_t num_pi = 0;
  std::vector<MarginalRow> marginal_rows;
  std::vector<MartingaleRow> martingale_rows;
};

/// Axes of the joint history (x_{1:t}, y_{1:t}), ascending.
std::vector<std::size_t> joint_history_axes(int t, int horizon);

/// Adds coupling columns (bounds [0,1], costs = payoff values) plus marginal
/// and joint-filtration martingale rows to an empty program.
MotLayout add_mot_core(lp::LinearProgram& lp, const MarginalSystem& system, std::span<const double> payoff);

struct HedgeReport {
  /// [asset][t-1][support point]
  std::array<std::vector<std::vector<double>>, 2> static_legs;
  /// [asset][t-1][joint history point]; per unit of the increment a_{t+1} − a_t.
  std::array<std::vector<std::vector<double>>, 2> dynamic_legs;
  /// Per coupling column, the contribution of every other row (empty for plain MOT).
  std::vector<double> causal_legs;
  double dual_value = 0.0;
  /// min over the grid of (payoff − portfolio) for min problems, (portfolio − payoff) for max.
  double subhedge_slack = 0.0;
  double duality_gap = 0.0;
};

struct ResidualSummary {
  double martingale = 0.0;
  double causality = 0.0;
  double anticausality = 0.0;
};

ResidualSummary residuals_of(const CouplingTensor& coupling);

struct BoundResult {
  std::string method;
  lp::Direction direction = lp::Direction::Minimize;
  double value = 0.0;
  CouplingTensor coupling;
  HedgeReport hedge;
  ResidualSummary residuals;
  int lp_rows = 0;
  int lp_cols = 0;
  long iterations = 0;
};

lp::LinearProgram build_mot_lp(const MotInstance& instance);

/// Reads the hedge off the row duals and verifies subhedging (within 1e-7,
/// skipping columns at their upper bound) and the dual objective (1e-6
/// relative). Throws Numerical when either check fails.
HedgeReport extract_dual_hedge(const lp::LinearProgram& lp, const lp::LPSolution& solution, const MotLayout& layout,
                               lp::Direction direction);

BoundResult solve_mot(const MotInstance& instance, const lp::SolverConfig& config = lp::config_from_env());

/// Shared epilogue for LP-based bounds: status checks, coupling, hedge, residuals.
BoundResult finish_bound(const std::string& method, const lp::LinearProgram& lp, const lp::LPSolution& solution,
                         const MotLayout& layout, lp::Direction direction);

}  // namespace mcmot
