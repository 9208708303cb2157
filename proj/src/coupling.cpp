#include "mcmot/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mcmot/error.hpp"
#include "mcmot/kernels.hpp"
#include "mcmot/lp.hpp"

namespace mcmot {

ProductGrid ProductGrid::of(const MarginalSystem& system) {
  ProductGrid g;
  g.horizon = system.horizon();
  for (Asset a : {Asset::X, Asset::Y})
    for (const auto& law : system.of(a)) g.axis_points.push_back(law.points());
  return g;
}

Shape ProductGrid::shape() const {
  Shape s;
  for (const auto& p : axis_points) s.push_back(p.size());
  return s;
}

const char* kind_name(ProjectionKind kind) {
  switch (kind) {
    case ProjectionKind::XPrefix: return "x_prefix";
    case ProjectionKind::XFull: return "x_full";
    case ProjectionKind::XFullWithYt: return "x_full_with_yt";
    case ProjectionKind::XPrefixWithYt: return "x_prefix_with_yt";
    case ProjectionKind::YPrefix: return "y_prefix";
    case ProjectionKind::YFull: return "y_full";
    case ProjectionKind::YFullWithXt: return "y_full_with_xt";
    case ProjectionKind::YPrefixWithXt: return "y_prefix_with_xt";
    case ProjectionKind::SingleX: return "single_x";
    case ProjectionKind::SingleY: return "single_y";
    case ProjectionKind::All: return "all";
  }
  return "unknown";
}

ProjectionKind kind_from_name(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(ProjectionKind::All); ++k) {
    auto kind = static_cast<ProjectionKind>(k);
    if (name == kind_name(kind)) return kind;
  }
  fail(ErrorCategory::Schema, "unknown projection family '" + name + "'");
}

ProjectionKind mirror(ProjectionKind kind) {
  switch (kind) {
    case ProjectionKind::XPrefix: return ProjectionKind::YPrefix;
    case ProjectionKind::XFull: return ProjectionKind::YFull;
    case ProjectionKind::XFullWithYt: return ProjectionKind::YFullWithXt;
    case ProjectionKind::XPrefixWithYt: return ProjectionKind::YPrefixWithXt;
    case ProjectionKind::YPrefix: return ProjectionKind::XPrefix;
    case ProjectionKind::YFull: return ProjectionKind::XFull;
    case ProjectionKind::YFullWithXt: return ProjectionKind::XFullWithYt;
    case ProjectionKind::YPrefixWithXt: return ProjectionKind::XPrefixWithYt;
    case ProjectionKind::SingleX: return ProjectionKind::SingleY;
    case ProjectionKind::SingleY: return ProjectionKind::SingleX;
    case ProjectionKind::All: return ProjectionKind::All;
  }
  return kind;
}

ProjectionKind prefix_kind(Asset own) { return own == Asset::X ? ProjectionKind::XPrefix : ProjectionKind::YPrefix; }
ProjectionKind full_kind(Asset own) { return own == Asset::X ? ProjectionKind::XFull : ProjectionKind::YFull; }
ProjectionKind full_with_other_kind(Asset own) {
  return own == Asset::X ? ProjectionKind::XFullWithYt : ProjectionKind::YFullWithXt;
}
ProjectionKind prefix_with_other_kind(Asset own) {
  return own == Asset::X ? ProjectionKind::XPrefixWithYt : ProjectionKind::YPrefixWithXt;
}

std::vector<KeyCoordinate> key_coordinates(const ProjectionKey& key, int horizon) {
  const int n = horizon, t = key.t;
  auto needs_t = [&] { require(t >= 1 && t <= n, "projection key time index out of range"); };
  std::vector<KeyCoordinate> out;
  auto range = [&](Asset a, int last) {
    for (int s = 1; s <= last; ++s) out.push_back({a, s});
  };
  switch (key.kind) {
    case ProjectionKind::XPrefix: needs_t(); range(Asset::X, t); break;
    case ProjectionKind::XFull: range(Asset::X, n); break;
    case ProjectionKind::XFullWithYt: needs_t(); range(Asset::X, n); out.push_back({Asset::Y, t}); break;
    case ProjectionKind::XPrefixWithYt: needs_t(); range(Asset::X, t); out.push_back({Asset::Y, t}); break;
    case ProjectionKind::YPrefix: needs_t(); range(Asset::Y, t); break;
    case ProjectionKind::YFull: range(Asset::Y, n); break;
    case ProjectionKind::YFullWithXt: needs_t(); out.push_back({Asset::X, t}); range(Asset::Y, n); break;
    case ProjectionKind::YPrefixWithXt: needs_t(); out.push_back({Asset::X, t}); range(Asset::Y, t); break;
    case ProjectionKind::SingleX: needs_t(); out.push_back({Asset::X, t}); break;
    case ProjectionKind::SingleY: needs_t(); out.push_back({Asset::Y, t}); break;
    case ProjectionKind::All: range(Asset::X, n); range(Asset::Y, n); break;
  }
  return out;
}

std::vector<std::size_t> kept_axes(const ProjectionKey& key, int horizon) {
  std::vector<std::size_t> axes;
  for (auto c : key_coordinates(key, horizon))
    axes.push_back(static_cast<std::size_t>((c.asset == Asset::X ? 0 : horizon) + c.t - 1));
  std::sort(axes.begin(), axes.end());
  return axes;
}

CouplingTensor::CouplingTensor(ProductGrid grid, std::vector<double> masses, double tol)
    : grid_(std::move(grid)), masses_(std::move(masses)) {
  require(masses_.size() == grid_.size(), "coupling masses do not match the grid size");
  double total = 0.0;
  for (double m : masses_) {
    require(std::isfinite(m) && m >= -tol && m <= 1.0 + tol, "coupling masses must lie in [0,1]");
    total += m;
  }
  require(std::abs(total - 1.0) <= std::max(tol, 1e-12 * masses_.size()), "coupling masses must sum to 1");
}

CouplingTensor CouplingTensor::from_solver(ProductGrid grid, std::span<const double> values) {
  std::vector<double> m(values.begin(), values.end());
  double total = 0.0;
  for (double& v : m) {
    if (v < -1e-7 || !std::isfinite(v)) fail(ErrorCategory::Numerical, "solver returned a negative coupling mass");
    v = std::clamp(v, 0.0, 1.0);
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-6) fail(ErrorCategory::Numerical, "solver coupling does not sum to 1");
  for (double& v : m) v /= total;
  return CouplingTensor(std::move(grid), std::move(m), 1e-9);
}

std::vector<double> project_raw(std::span<const double> masses, const Shape& shape,
                                std::span<const std::size_t> axes) {
  AxisMap map(shape, axes);
  std::vector<std::size_t> idx(masses.size());
  MultiIndex mi(shape.size(), 0);
  for (std::size_t k = 0; k < masses.size(); ++k) {
    idx[k] = map(mi);
    next_index(mi, shape);
  }
  std::vector<double> out(map.sub_size(), 0.0);
  kernels::scatter_add(masses, idx, out);
  return out;
}

ProjectedTensor project(const CouplingTensor& coupling, const ProjectionKey& key) {
  ProjectedTensor p;
  p.axes = kept_axes(key, coupling.horizon());
  const Shape full = coupling.shape();
  for (auto a : p.axes) p.shape.push_back(full[a]);
  p.values = project_raw(coupling.masses(), full, p.axes);
  return p;
}

std::vector<std::size_t> sub_index_map(const Shape& full_shape, std::span<const std::size_t> from_axes,
                                       std::span<const std::size_t> to_axes) {
  Shape from_shape;
  for (auto a : from_axes) from_shape.push_back(full_shape[a]);
  std::vector<std::size_t> positions;
  for (auto a : to_axes) {
    auto it = std::find(from_axes.begin(), from_axes.end(), a);
    require(it != from_axes.end(), "sub-grid axes must be a subset");
    positions.push_back(static_cast<std::size_t>(it - from_axes.begin()));
  }
  AxisMap map(from_shape, positions);
  std::vector<std::size_t> out(element_count(from_shape));
  MultiIndex mi(from_shape.size(), 0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = map(mi);
    next_index(mi, from_shape);
  }
  return out;
}

double bilinear_residual(const CouplingTensor& coupling, Asset own, int t) {
  const int n = coupling.horizon();
  require(t >= 1 && t <= n - 1, "causality time index must lie in 1..N-1");
  const Shape full = coupling.shape();
  const auto a = project(coupling, {full_with_other_kind(own), t});
  const auto b = project(coupling, {prefix_kind(own), t});
  const auto c = project(coupling, {prefix_with_other_kind(own), t});
  const auto d = project(coupling, {full_kind(own), 0});
  std::vector<std::size_t> ia(a.values.size());
  std::iota(ia.begin(), ia.end(), std::size_t{0});
  const auto ib = sub_index_map(full, a.axes, b.axes);
  const auto ic = sub_index_map(full, a.axes, c.axes);
  const auto id = sub_index_map(full, a.axes, d.axes);
  return kernels::max_bilinear_residual(a.values, ia, b.values, ib, c.values, ic, d.values, id);
}

double max_bicausal_residual(const CouplingTensor& coupling) {
  double worst = 0.0;
  for (int t = 1; t < coupling.horizon(); ++t)
    worst = std::max({worst, causality_residual(coupling, t), anticausality_residual(coupling, t)});
  return worst;
}

double testfunction_causality_gap(const CouplingTensor& coupling, int t, std::span<const double> h,
                                  std::span<const double> g) {
  const int n = coupling.horizon();
  require(t >= 1 && t <= n, "test-function time index must lie in 1..N");
  const Shape full = coupling.shape();
  const auto px = project(coupling, {ProjectionKind::XFull, 0});
  const auto pxt = project(coupling, {ProjectionKind::XPrefix, t});
  const auto yaxes = kept_axes({ProjectionKind::YPrefix, t}, n);
  Shape yshape;
  for (auto ax : yaxes) yshape.push_back(full[ax]);
  require(h.size() == element_count(yshape), "h table does not match the Y-prefix grid");
  require(g.size() == px.values.size(), "g table does not match the X-full grid");

  // cond[x_{1:N}] = Σ_{x̄} g(x_{1:t}, x̄_{t+1:N}) π(x̄ | x_{1:t}); equals g where π(x_{1:t}) = 0.
  const auto to_prefix = sub_index_map(full, px.axes, pxt.axes);
  std::vector<double> num(pxt.values.size(), 0.0);
  for (std::size_t k = 0; k < px.values.size(); ++k) num[to_prefix[k]] += g[k] * px.values[k];
  std::vector<double> bracket(px.values.size());
  for (std::size_t k = 0; k < px.values.size(); ++k) {
    const double mass = pxt.values[to_prefix[k]];
    bracket[k] = mass > 0.0 ? g[k] - num[to_prefix[k]] / mass : 0.0;
  }

  std::vector<std::size_t> all_axes(full.size());
  std::iota(all_axes.begin(), all_axes.end(), std::size_t{0});
  const auto to_x = sub_index_map(full, all_axes, px.axes);
  const auto to_y = sub_index_map(full, all_axes, yaxes);
  double total = 0.0;
  const auto& m = coupling.masses();
  for (std::size_t k = 0; k < m.size(); ++k) total += m[k] * h[to_y[k]] * bracket[to_x[k]];
  return total;
}

namespace {

double martingale_residual_impl(const CouplingTensor& coupling, bool joint) {
  const int n = coupling.horizon();
  const Shape full = coupling.shape();
  const auto& grid = coupling.grid();
  double worst = 0.0;
  std::vector<double> weight(coupling.masses().size());
  std::vector<std::size_t> idx(coupling.masses().size());
  MultiIndex mi;
  for (int t = 1; t < n; ++t) {
    for (Asset a : {Asset::X, Asset::Y}) {
      std::vector<std::size_t> hist;
      for (int s = 1; s <= t; ++s) {
        hist.push_back(grid.axis(a, s));
        if (joint) hist.push_back(grid.axis(other(a), s));
      }
      std::sort(hist.begin(), hist.end());
      AxisMap map(full, hist);
      const std::size_t now = grid.axis(a, t), next = grid.axis(a, t + 1);
      mi.assign(full.size(), 0);
      for (std::size_t k = 0; k < weight.size(); ++k) {
        weight[k] = grid.axis_points[next][mi[next]] - grid.axis_points[now][mi[now]];
        idx[k] = map(mi);
        next_index(mi, full);
      }
      std::vector<double> acc(map.sub_size(), 0.0);
      kernels::scatter_add_weighted(coupling.masses(), weight, idx, acc);
      worst = std::max(worst, kernels::max_abs(acc));
    }
  }
  return worst;
}

}  // namespace

double martingale_residual(const CouplingTensor& coupling) { return martingale_residual_impl(coupling, true); }

double individual_martingale_residual(const CouplingTensor& coupling) {
  return martingale_residual_impl(coupling, false);
}

PathLaw build_martingale_law(const std::vector<MarginalLaw>& asset_laws) {
  require(!asset_laws.empty(), "need at least one marginal law");
  PathLaw out;
  for (const auto& law : asset_laws) out.shape.push_back(law.size());
  const int n = static_cast<int>(asset_laws.size());
  if (n == 1) {
    out.masses = asset_laws[0].masses();
    return out;
  }
  const std::size_t size = element_count(out.shape);
  lp::LinearProgram prog;
  for (std::size_t k = 0; k < size; ++k) prog.add_var(0.0, 1.0);

  for (int t = 0; t < n; ++t) {
    std::vector<std::vector<lp::Term>> rows(out.shape[t]);
    MultiIndex mi(n, 0);
    for (std::size_t k = 0; k < size; ++k) {
      rows[mi[t]].push_back({static_cast<int>(k), 1.0});
      next_index(mi, out.shape);
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
      prog.add_row(std::move(rows[i]), lp::Sense::Equal, asset_laws[t].masses()[i]);
  }
  for (int t = 0; t + 1 < n; ++t) {
    std::vector<std::size_t> prefix(t + 1);
    std::iota(prefix.begin(), prefix.end(), std::size_t{0});
    AxisMap map(out.shape, prefix);
    std::vector<std::vector<lp::Term>> rows(map.sub_size());
    MultiIndex mi(n, 0);
    for (std::size_t k = 0; k < size; ++k) {
      const double step = asset_laws[t + 1].points()[mi[t + 1]] - asset_laws[t].points()[mi[t]];
      if (step != 0.0) rows[map(mi)].push_back({static_cast<int>(k), step});
      next_index(mi, out.shape);
    }
    for (auto& r : rows)
      if (!r.empty()) prog.add_row(std::move(r), lp::Sense::Equal, 0.0);
  }
  auto sol = lp::solve(prog, lp::config_from_env());
  if (sol.status == lp::Status::Infeasible)
    fail(ErrorCategory::Infeasible, "no martingale law exists for these marginals (convex order violated)");
  if (sol.status != lp::Status::Optimal)
    fail(ErrorCategory::Numerical, std::string("martingale law LP ended with status ") + lp::status_name(sol.status));
  out.masses = sol.primal;
  double total = 0.0;
  for (double& v : out.masses) total += (v = std::max(v, 0.0));
  for (double& v : out.masses) v /= total;
  return out;
}

double path_martingale_residual(const PathLaw& law, const std::vector<MarginalLaw>& asset_laws) {
  const int n = static_cast<int>(law.shape.size());
  double worst = 0.0;
  for (int t = 0; t + 1 < n; ++t) {
    std::vector<std::size_t> prefix(t + 1);
    std::iota(prefix.begin(), prefix.end(), std::size_t{0});
    AxisMap map(law.shape, prefix);
    std::vector<double> acc(map.sub_size(), 0.0);
    MultiIndex mi(n, 0);
    for (std::size_t k = 0; k < law.masses.size(); ++k) {
      acc[map(mi)] += law.masses[k] * (asset_laws[t + 1].points()[mi[t + 1]] - asset_laws[t].points()[mi[t]]);
      next_index(mi, law.shape);
    }
    for (double v : acc) worst = std::max(worst, std::abs(v));
  }
  return worst;
}

CouplingTensor product_coupling(const MarginalSystem& system, const PathLaw& x, const PathLaw& y) {
  std::vector<double> m;
  m.reserve(x.masses.size() * y.masses.size());
  for (double px : x.masses)
    for (double py : y.masses) m.push_back(px * py);
  return CouplingTensor(ProductGrid::of(system), std::move(m), 1e-9);
}

CouplingTensor independent_martingale_coupling(const MarginalSystem& system) {
  return product_coupling(system, build_martingale_law(system.of(Asset::X)),
                          build_martingale_law(system.of(Asset::Y)));
}

}  // namespace mcmot
