#pragma once

// Seeded generators for randomized systems, used by the test suites, the
// acceptance runner and `mcmot ratio --synthetic`.

#include <cstdint>
#include <random>

#include "mcmot/calibration.hpp"
#include "mcmot/marginals.hpp"

namespace mcmot::synthetic {

struct SystemShape {
  int min_points = 2;
  int max_points = 4;
  double x_level = 10.0;
  double y_level = 20.0;
};

/// Two-maturity law pair of one asset in convex order: the later support is
/// drawn first and every earlier point is split between two bracketing later
/// points, so a martingale kernel exists by construction.
std::vector<MarginalLaw> random_two_period(std::mt19937_64& rng, double level, int min_points, int max_points,
                                           const std::string& asset_id);

/// Two assets, two maturities.
MarginalSystem random_system(std::mt19937_64& rng, const SystemShape& shape = {});

struct ChainShape {
  int maturities = 2;
  int min_strikes = 3;
  int max_strikes = 6;
  double spread = 0.01;  // half-width of every bid/ask in scaled units
  double spot = 100.0;
  double rate = 0.02;    // maturities spaced half a year apart
};

/// Option chain priced from a known discrete martingale law. Each maturity's
/// support is its strike set plus one unquoted top point, which keeps every
/// quoted call worth more than the spread.
struct SyntheticChain {
  std::vector<MarketSlice> slices;
  Shape shape;
  std::vector<std::vector<double>> scaled_support;
  std::vector<double> joint;
};

SyntheticChain random_chain(std::mt19937_64& rng, const ChainShape& shape = {});

/// Paper-sized worked example: X1 {9,10,11}, X2 {0,10,20}, Y1 {16,20,24}, Y2 {14,20,26}.
MarginalSystem worked_example();

}  // namespace mcmot::synthetic
