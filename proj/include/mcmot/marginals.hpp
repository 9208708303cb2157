#pragma once

#include <array>
#include <string>
#include <vector>

namespace mcmot {

/// Ordered price levels for one asset at one maturity.
class SupportGrid {
 public:
  SupportGrid() = default;
  /// Throws InvalidInput unless points are finite, non-negative and strictly increasing.
  SupportGrid(std::string asset_id, int maturity_index, std::vector<double> points);

  const std::string& asset_id() const { return asset_id_; }
  int maturity_index() const { return maturity_index_; }
  const std::vector<double>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }

 private:
  std::string asset_id_;
  int maturity_index_ = 1;
  std::vector<double> points_;
};

/// Discrete risk-neutral law of one asset at one maturity. Zero masses are kept.
class MarginalLaw {
 public:
  MarginalLaw() = default;
  MarginalLaw(SupportGrid grid, std::vector<double> masses);
  /// Convenience for tests and fixtures.
  MarginalLaw(std::vector<double> points, std::vector<double> masses, std::string asset_id = "S",
              int maturity_index = 1);

  const SupportGrid& grid() const { return grid_; }
  const std::vector<double>& points() const { return grid_.points(); }
  const std::vector<double>& masses() const { return masses_; }
  std::size_t size() const { return masses_.size(); }

 private:
  SupportGrid grid_;
  std::vector<double> masses_;
};

enum class Asset { X = 0, Y = 1 };

inline Asset other(Asset a) { return a == Asset::X ? Asset::Y : Asset::X; }
inline const char* asset_name(Asset a) { return a == Asset::X ? "X" : "Y"; }

/// Two assets, each with N laws ordered by maturity.
struct MarginalSystem {
  std::array<std::string, 2> ids{"X", "Y"};
  std::array<std::vector<MarginalLaw>, 2> laws;

  MarginalSystem() = default;
  MarginalSystem(std::vector<MarginalLaw> x_laws, std::vector<MarginalLaw> y_laws);

  const std::vector<MarginalLaw>& of(Asset a) const { return laws[static_cast<int>(a)]; }
  const MarginalLaw& law(Asset a, int t) const { return laws[static_cast<int>(a)][t - 1]; }
  /// Number of maturities N.
  int horizon() const { return static_cast<int>(laws[0].size()); }
};

double mean(const MarginalLaw& law);
double call_value(const MarginalLaw& law, double strike);

struct ConvexOrderCheck {
  bool ordered = false;
  double mean_gap = 0.0;
  double worst_violation = 0.0;  // max positive excess of earlier call over later call
};

struct ValidationConfig {
  double mean_tolerance = 1e-8;
  double call_tolerance = 1e-10;
};

ConvexOrderCheck check_convex_order(const MarginalLaw& earlier, const MarginalLaw& later,
                                    const ValidationConfig& config = {});

struct PairVerdict {
  Asset asset = Asset::X;
  int earlier = 1;  // maturity index of the earlier law
  double mean_gap = 0.0;
  double worst_violation = 0.0;
  bool mean_ok = true;
  bool convex_ok = true;
};

struct ValidationReport {
  bool pass = true;
  std::vector<PairVerdict> pairs;
  std::vector<std::string> problems;
};

ValidationReport validate_system(const MarginalSystem& system, const ValidationConfig& config = {});

}  // namespace mcmot
