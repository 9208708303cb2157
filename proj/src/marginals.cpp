#include "mcmot/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mcmot/error.hpp"

namespace mcmot {

SupportGrid::SupportGrid(std::string asset_id, int maturity_index, std::vector<double> points)
    : asset_id_(std::move(asset_id)), maturity_index_(maturity_index), points_(std::move(points)) {
  require(!points_.empty(), "support grid for " + asset_id_ + " needs at least one point");
  require(maturity_index_ >= 1, "maturity index must be 1-based");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    require(std::isfinite(points_[i]) && points_[i] >= 0.0,
            "support points must be finite and non-negative");
    if (i > 0) require(points_[i] > points_[i - 1], "support points must be strictly increasing");
  }
}

MarginalLaw::MarginalLaw(SupportGrid grid, std::vector<double> masses)
    : grid_(std::move(grid)), masses_(std::move(masses)) {
  require(masses_.size() == grid_.size(), "masses must align with support points");
  double total = 0.0;
  for (double m : masses_) {
    require(std::isfinite(m) && m >= 0.0 && m <= 1.0, "masses must lie in [0,1]");
    total += m;
  }
  require(std::abs(total - 1.0) <= 1e-10, "masses must sum to 1");
}

MarginalLaw::MarginalLaw(std::vector<double> points, std::vector<double> masses,
                         std::string asset_id, int maturity_index)
    : MarginalLaw(SupportGrid(std::move(asset_id), maturity_index, std::move(points)),
                  std::move(masses)) {}

MarginalSystem::MarginalSystem(std::vector<MarginalLaw> x_laws, std::vector<MarginalLaw> y_laws) {
  laws[0] = std::move(x_laws);
  laws[1] = std::move(y_laws);
  require(!laws[0].empty() && laws[0].size() == laws[1].size(),
          "both assets need the same, non-zero number of maturities");
}

double mean(const MarginalLaw& law) {
  const auto& p = law.points();
  const auto& m = law.masses();
  return std::inner_product(p.begin(), p.end(), m.begin(), 0.0);
}

double call_value(const MarginalLaw& law, double strike) {
  double v = 0.0;
  for (std::size_t i = 0; i < law.size(); ++i)
    v += std::max(law.points()[i] - strike, 0.0) * law.masses()[i];
  return v;
}

ConvexOrderCheck check_convex_order(const MarginalLaw& earlier, const MarginalLaw& later,
                                    const ValidationConfig& config) {
  ConvexOrderCheck out;
  out.mean_gap = mean(later) - mean(earlier);

  // Call prices are piecewise linear in the strike with kinks on the union of
  // supports, so checking those strikes is exhaustive.
  std::vector<double> strikes = earlier.points();
  strikes.insert(strikes.end(), later.points().begin(), later.points().end());
  std::sort(strikes.begin(), strikes.end());
  strikes.erase(std::unique(strikes.begin(), strikes.end()), strikes.end());

  for (double k : strikes)
    out.worst_violation = std::max(out.worst_violation, call_value(earlier, k) - call_value(later, k));

  out.ordered = std::abs(out.mean_gap) <= config.mean_tolerance &&
                out.worst_violation <= config.call_tolerance;
  return out;
}

ValidationReport validate_system(const MarginalSystem& system, const ValidationConfig& config) {
  ValidationReport report;
  if (system.laws[0].size() != system.laws[1].size() || system.laws[0].empty()) {
    report.pass = false;
    report.problems.push_back("assets carry different or zero maturity counts");
    return report;
  }
  for (Asset a : {Asset::X, Asset::Y}) {
    const auto& laws = system.of(a);
    for (std::size_t t = 0; t + 1 < laws.size(); ++t) {
      auto check = check_convex_order(laws[t], laws[t + 1], config);
      PairVerdict v;
      v.asset = a;
      v.earlier = static_cast<int>(t) + 1;
      v.mean_gap = check.mean_gap;
      v.worst_violation = check.worst_violation;
      v.mean_ok = std::abs(check.mean_gap) <= config.mean_tolerance;
      v.convex_ok = check.worst_violation <= config.call_tolerance;
      if (!v.mean_ok || !v.convex_ok) {
        report.pass = false;
        std::ostringstream msg;
        msg << "asset " << system.ids[static_cast<int>(a)] << " maturities " << t + 1 << "->" << t + 2;
        if (!v.mean_ok) msg << ": mean gap " << check.mean_gap;
        if (!v.convex_ok) msg << ": call excess " << check.worst_violation;
        report.problems.push_back(msg.str());
      }
      report.pairs.push_back(v);
    }
  }
  return report;
}

}  // namespace mcmot
