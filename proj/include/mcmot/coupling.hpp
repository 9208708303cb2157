#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mcmot/grid.hpp"
#include "mcmot/marginals.hpp"

namespace mcmot {

/// Support points of every axis of the joint path space, ordered
/// (X_1..X_N, Y_1..Y_N). This is the index space of every coupling tensor.
struct ProductGrid {
  int horizon = 0;
  std::vector<std::vector<double>> axis_points;

  static ProductGrid of(const MarginalSystem& system);

  Shape shape() const;
  std::size_t size() const { return element_count(shape()); }
  std::size_t axis(Asset a, int t) const {
    return static_cast<std::size_t>((a == Asset::X ? 0 : horizon) + t - 1);
  }
  double point(Asset a, int t, std::size_t i) const { return axis_points[axis(a, t)][i]; }
};

/// Families of partial sums of a coupling. "Own" asset A is X for the X*
/// kinds and Y for the Y* kinds; the mirror of a kind swaps the assets.
enum class ProjectionKind {
  XPrefix,          // x_{1:t}
  XFull,            // x_{1:N}
  XFullWithYt,      // (x_{1:N}, y_t)
  XPrefixWithYt,    // (x_{1:t}, y_t)
  YPrefix,
  YFull,
  YFullWithXt,
  YPrefixWithXt,
  SingleX,          // x_t
  SingleY,          // y_t
  All,              // identity
};

struct ProjectionKey {
  ProjectionKind kind = ProjectionKind::All;
  int t = 0;  // unused (0) for XFull, YFull and All

  friend bool operator==(const ProjectionKey&, const ProjectionKey&) = default;
  friend auto operator<=>(const ProjectionKey&, const ProjectionKey&) = default;
};

const char* kind_name(ProjectionKind kind);
ProjectionKind kind_from_name(const std::string& name);
ProjectionKind mirror(ProjectionKind kind);

/// Family kinds in terms of an own asset.
ProjectionKind prefix_kind(Asset own);
ProjectionKind full_kind(Asset own);
ProjectionKind full_with_other_kind(Asset own);
ProjectionKind prefix_with_other_kind(Asset own);

/// Kept tensor axes in ascending order. Throws InvalidInput on a bad t.
std::vector<std::size_t> kept_axes(const ProjectionKey& key, int horizon);

/// Marginal masses (per maturity) of the coordinates a key keeps, e.g. used
/// by the default capacity bound min rule.
struct KeyCoordinate {
  Asset asset;
  int t;
};
std::vector<KeyCoordinate> key_coordinates(const ProjectionKey& key, int horizon);

/// Joint probability masses over the full product grid, row-major.
class CouplingTensor {
 public:
  CouplingTensor() = default;
  /// Throws InvalidInput unless entries lie in [0,1] and sum to 1 within `tol`.
  CouplingTensor(ProductGrid grid, std::vector<double> masses, double tol = 1e-10);

  /// Builds from raw solver output: clamps round-off negatives and renormalizes.
  static CouplingTensor from_solver(ProductGrid grid, std::span<const double> values);

  const ProductGrid& grid() const { return grid_; }
  Shape shape() const { return grid_.shape(); }
  const std::vector<double>& masses() const { return masses_; }
  int horizon() const { return grid_.horizon; }

 private:
  ProductGrid grid_;
  std::vector<double> masses_;
};

struct ProjectedTensor {
  std::vector<std::size_t> axes;
  Shape shape;
  std::vector<double> values;
};

/// Partial sums over raw masses; `axes` sorted ascending.
std::vector<double> project_raw(std::span<const double> masses, const Shape& shape,
                                std::span<const std::size_t> axes);

ProjectedTensor project(const CouplingTensor& coupling, const ProjectionKey& key);

/// Index of each entry of the `from_axes` grid within the `to_axes` grid (to ⊆ from).
std::vector<std::size_t> sub_index_map(const Shape& full_shape, std::span<const std::size_t> from_axes,
                                       std::span<const std::size_t> to_axes);

/// max |π(a_{1:N}, b_t)·π(a_{1:t}) − π(a_{1:t}, b_t)·π(a_{1:N})| with a = own asset.
double bilinear_residual(const CouplingTensor& coupling, Asset own, int t);
inline double causality_residual(const CouplingTensor& c, int t) { return bilinear_residual(c, Asset::X, t); }
inline double anticausality_residual(const CouplingTensor& c, int t) { return bilinear_residual(c, Asset::Y, t); }
/// Max over all t in 1..N−1 and both directions.
double max_bicausal_residual(const CouplingTensor& coupling);

/// Discrete test-function form of causality at time t. `h` is a table over
/// the Y-prefix(t) grid, `g` over the X-full grid (row-major).
double testfunction_causality_gap(const CouplingTensor& coupling, int t, std::span<const double> h,
                                  std::span<const double> g);

/// Martingale residual under the joint filtration (histories (x_{1:t}, y_{1:t})),
/// in denominator-free form.
double martingale_residual(const CouplingTensor& coupling);
/// Same, conditioning each asset only on its own history.
double individual_martingale_residual(const CouplingTensor& coupling);

/// Joint law of one asset's path (i_1..i_N), row-major.
struct PathLaw {
  Shape shape;
  std::vector<double> masses;
};

/// A martingale joint law with the given marginals, from an LP feasibility
/// problem. Throws Infeasible when the laws are not in convex order.
PathLaw build_martingale_law(const std::vector<MarginalLaw>& asset_laws);

/// One-asset martingale residual of a path law.
double path_martingale_residual(const PathLaw& law, const std::vector<MarginalLaw>& asset_laws);

/// Product of the two single-asset martingale laws.
CouplingTensor independent_martingale_coupling(const MarginalSystem& system);

/// Product of two path laws on the grid of `system`.
CouplingTensor product_coupling(const MarginalSystem& system, const PathLaw& x, const PathLaw& y);

}  // namespace mcmot
