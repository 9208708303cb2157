#pragma once

#include <string>
#include <vector>

#include "mcmot/grid.hpp"
#include "mcmot/lp.hpp"
#include "mcmot/marginals.hpp"

namespace mcmot {

struct OptionQuote {
  int maturity_index = 1;
  double strike = 0.0;
  double bid = 0.0;
  double ask = 0.0;
};

/// Call quotes of one asset at one maturity. `extra_points` (price units) are
/// added to the support without being priced by any quote.
struct MarketSlice {
  int maturity_index = 1;
  double forward = 1.0;
  double discount = 1.0;
  std::vector<OptionQuote> quotes;
  std::vector<double> extra_points;

  /// Throws InvalidInput on unsorted strikes, bid > ask, bad forward or discount.
  void validate() const;
};

struct ScaledQuotes {
  std::vector<double> ask, bid, strike;
};

/// a = A/(D·F), b = B/(D·F), k = K/F.
ScaledQuotes scale_quotes(const MarketSlice& slice);

/// Scaled support of a slice: quoted strikes plus extra points, over F.
std::vector<double> scaled_support(const MarketSlice& slice);

struct CalibrationLayout {
  Shape shape;                         // support size per maturity
  std::vector<std::vector<double>> support;
  int num_mu = 0;                      // joint masses occupy columns [0, num_mu)
  std::vector<std::vector<int>> price_var;  // c per (slice, quote)
  std::vector<std::vector<double>> ask, bid; // scaled
};

struct CalibrationProgram {
  lp::LinearProgram lp;
  CalibrationLayout layout;
};

/// Joint masses, fitted prices and split pairs; pricing, martingale, mean and mass rows.
/// Slices must be ordered by maturity 1..N.
CalibrationProgram build_calibration_program(const std::vector<MarketSlice>& slices);
lp::LinearProgram build_calibration_lp(const std::vector<MarketSlice>& slices);

struct CalibrationResult {
  Shape shape;
  std::vector<double> joint;             // row-major over the support grids
  std::vector<MarginalLaw> marginals;    // scaled points, unit mean
  std::vector<std::vector<double>> fitted_scaled_prices;
  double objective = 0.0;
  double spread_floor = 0.0;
  bool all_quotes_feasible = false;
  long iterations = 0;
};

/// Throws Infeasible (naming the failing row families) when no risk-neutral
/// joint law exists on the support grids.
CalibrationResult calibrate(const std::vector<MarketSlice>& slices, const lp::SolverConfig& config = {},
                            const std::string& asset_id = "S");

struct QuoteDiagnosis {
  int maturity_index = 1;
  double strike = 0.0;
  double fitted = 0.0;      // scaled
  double distance = 0.0;    // to [b, a], scaled
  double excess = 0.0;      // |c−a| + |c−b| − (a−b)
  bool outside = false;
};

struct FeasibilityDiagnosis {
  std::vector<QuoteDiagnosis> quotes;
  double excess = 0.0;  // objective − spread_floor
};

FeasibilityDiagnosis feasibility_diagnosis(const CalibrationResult& result, const std::vector<MarketSlice>& slices);

/// Calibrated laws in price units: every scaled point multiplied by `level`.
std::vector<MarginalLaw> price_marginals(const CalibrationResult& result, double level);

/// Martingale residual of the calibrated joint on scaled prices.
double calibration_martingale_residual(const CalibrationResult& result);

}  // namespace mcmot
