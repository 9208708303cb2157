#include "mcmot/mccormick.hpp"

#include <algorithm>
#include <cmath>

#include "mcmot/error.hpp"

namespace mcmot {

const BoundTable& CapacityBounds::at(const ProjectionKey& key) const {
  auto it = tables.find(key);
  if (it == tables.end())
    fail(ErrorCategory::InvalidInput, std::string("capacity bounds miss family ") + kind_name(key.kind) +
                                          "(" + std::to_string(key.t) + ")");
  return it->second;
}

BoundTable& CapacityBounds::at(const ProjectionKey& key) {
  return const_cast<BoundTable&>(static_cast<const CapacityBounds&>(*this).at(key));
}

void CapacityBounds::validate(const ProductGrid& grid) const {
  require(horizon == grid.horizon, "capacity bounds horizon does not match the marginals");
  const Shape full = grid.shape();
  for (const auto& key : mccormick_families(horizon)) {
    const auto& tab = at(key);
    Shape expect;
    for (auto a : kept_axes(key, horizon)) expect.push_back(full[a]);
    require(tab.shape == expect, std::string("capacity table shape mismatch for ") + kind_name(key.kind));
    require(tab.lower.size() == element_count(expect) && tab.upper.size() == tab.lower.size(),
            "capacity table size mismatch");
    for (std::size_t k = 0; k < tab.lower.size(); ++k)
      require(tab.lower[k] >= 0.0 && tab.lower[k] <= tab.upper[k] && tab.upper[k] <= 1.0,
              std::string("capacity bounds must satisfy 0 <= L <= U <= 1 in ") + kind_name(key.kind));
  }
}

std::vector<ProjectionKey> mccormick_families(int horizon) {
  std::vector<ProjectionKey> keys;
  if (horizon < 2) return keys;
  for (Asset a : {Asset::X, Asset::Y}) {
    for (int t = 1; t < horizon; ++t) {
      keys.push_back({full_with_other_kind(a), t});
      keys.push_back({prefix_kind(a), t});
      keys.push_back({prefix_with_other_kind(a), t});
    }
    keys.push_back({full_kind(a), 0});
  }
  return keys;
}

CapacityBounds default_bounds(const MarginalSystem& system) {
  CapacityBounds cb;
  cb.horizon = system.horizon();
  const auto grid = ProductGrid::of(system);
  const Shape full = grid.shape();
  for (const auto& key : mccormick_families(cb.horizon)) {
    auto coords = key_coordinates(key, cb.horizon);
    std::sort(coords.begin(), coords.end(), [&](const KeyCoordinate& l, const KeyCoordinate& r) {
      return grid.axis(l.asset, l.t) < grid.axis(r.asset, r.t);
    });
    BoundTable tab;
    for (const auto& c : coords) tab.shape.push_back(full[grid.axis(c.asset, c.t)]);
    const std::size_t size = element_count(tab.shape);
    tab.lower.assign(size, 0.0);
    tab.upper.assign(size, 1.0);
    MultiIndex mi(tab.shape.size(), 0);
    for (std::size_t k = 0; k < size; ++k) {
      double u = 1.0;
      for (std::size_t q = 0; q < coords.size(); ++q)
        u = std::min(u, system.law(coords[q].asset, coords[q].t).masses()[mi[q]]);
      tab.upper[k] = u;
      next_index(mi, tab.shape);
    }
    cb.tables.emplace(key, std::move(tab));
  }
  return cb;
}

namespace {

void add_envelope_rows(lp::LinearProgram& lp, int w, int a, double la, double ua, int b, double lb, double ub,
                       const std::string& tag) {
  auto terms = [&](double ca, double cb) {
    std::vector<lp::Term> t{{w, 1.0}};
    if (ca != 0.0) t.push_back({a, -ca});
    if (cb != 0.0) t.push_back({b, -cb});
    return t;
  };
  lp.add_row(terms(lb, la), lp::Sense::GreaterEqual, -la * lb, tag);
  lp.add_row(terms(ub, ua), lp::Sense::GreaterEqual, -ua * ub, tag);
  lp.add_row(terms(lb, ua), lp::Sense::LessEqual, -ua * lb, tag);
  lp.add_row(terms(ub, la), lp::Sense::LessEqual, -la * ub, tag);
}

}  // namespace

McCormickProgram build_mccormick_program(const MarginalSystem& system, std::span<const double> payoff,
                                         const CapacityBounds& bounds, lp::Direction direction) {
  McCormickProgram prog;
  prog.lp.direction = direction;
  prog.layout = add_mot_core(prog.lp, system, payoff);
  const auto& layout = prog.layout;
  bounds.validate(layout.grid);
  const int n = system.horizon();

  for (const auto& key : mccormick_families(n)) {
    const auto& tab = bounds.at(key);
    const auto axes = kept_axes(key, n);
    AxisMap map(layout.shape, axes);
    const int first = prog.lp.num_vars();
    prog.aux_first[key] = first;
    const std::string name = std::string("aux_") + kind_name(key.kind) + std::to_string(key.t);
    for (std::size_t k = 0; k < tab.lower.size(); ++k) prog.lp.add_var(tab.lower[k], tab.upper[k], 0.0, name);
    std::vector<std::vector<lp::Term>> rows(tab.lower.size());
    MultiIndex mi(layout.shape.size(), 0);
    for (std::size_t k = 0; k < layout.num_pi; ++k) {
      rows[map(mi)].push_back({static_cast<int>(k), 1.0});
      next_index(mi, layout.shape);
    }
    for (std::size_t e = 0; e < rows.size(); ++e) {
      rows[e].push_back({first + static_cast<int>(e), -1.0});
      prog.lp.add_row(std::move(rows[e]), lp::Sense::Equal, 0.0, "def_" + name.substr(4));
    }
  }

  for (Asset own : {Asset::X, Asset::Y}) {
    for (int t = 1; t < n; ++t) {
      EnvelopeBlock blk;
      blk.own = own;
      blk.t = t;
      blk.key_a = {full_with_other_kind(own), t};
      blk.key_b = {prefix_kind(own), t};
      blk.key_c = {prefix_with_other_kind(own), t};
      blk.key_d = {full_kind(own), 0};
      const auto axes_a = kept_axes(blk.key_a, n);
      blk.ib = sub_index_map(layout.shape, axes_a, kept_axes(blk.key_b, n));
      blk.ic = sub_index_map(layout.shape, axes_a, kept_axes(blk.key_c, n));
      blk.id = sub_index_map(layout.shape, axes_a, kept_axes(blk.key_d, n));
      blk.points = blk.ib.size();
      const auto &ta = bounds.at(blk.key_a), &tb = bounds.at(blk.key_b), &tc = bounds.at(blk.key_c),
                 &td = bounds.at(blk.key_d);
      const int fa = prog.aux_first.at(blk.key_a), fb = prog.aux_first.at(blk.key_b),
                fc = prog.aux_first.at(blk.key_c), fd = prog.aux_first.at(blk.key_d);
      const std::string tag = std::string("env_") + asset_name(own) + std::to_string(t);
      blk.w_first = prog.lp.num_vars();
      for (std::size_t p = 0; p < blk.points; ++p) prog.lp.add_var(0.0, 1.0, 0.0, "w_" + tag.substr(4));
      blk.row_first = prog.lp.num_rows();
      for (std::size_t p = 0; p < blk.points; ++p) {
        const int w = blk.w_first + static_cast<int>(p);
        const std::size_t b = blk.ib[p], c = blk.ic[p], d = blk.id[p];
        add_envelope_rows(prog.lp, w, fa + static_cast<int>(p), ta.lower[p], ta.upper[p], fb + static_cast<int>(b),
                          tb.lower[b], tb.upper[b], tag);
        add_envelope_rows(prog.lp, w, fc + static_cast<int>(c), tc.lower[c], tc.upper[c], fd + static_cast<int>(d),
                          td.lower[d], td.upper[d], tag);
      }
      prog.envelopes.push_back(std::move(blk));
    }
  }
  return prog;
}

lp::LinearProgram build_mccormick_lp(const McCormickInstance& instance) {
  return build_mccormick_program(instance.system, tabulate(instance.payoff, instance.system), instance.bounds,
                                 instance.direction)
      .lp;
}

BoundResult solve_mccormick(const McCormickInstance& instance, const lp::SolverConfig& config) {
  auto prog = build_mccormick_program(instance.system, tabulate(instance.payoff, instance.system), instance.bounds,
                                      instance.direction);
  auto sol = lp::solve(prog.lp, config);
  return finish_bound("mccormick", prog.lp, sol, prog.layout, instance.direction);
}

double envelope_gap(double a, double la, double ua, double b, double lb, double ub, double c, double lc, double uc,
                    double d, double ld, double ud) {
  const double lo1 = std::max(lb * a + la * b - la * lb, ub * a + ua * b - ua * ub);
  const double up1 = std::min(lb * a + ua * b - ua * lb, ub * a + la * b - la * ub);
  const double lo2 = std::max(ld * c + lc * d - lc * ld, ud * c + uc * d - uc * ud);
  const double up2 = std::min(ld * c + uc * d - uc * ld, ud * c + lc * d - lc * ud);
  return std::max(up1 - lo1, up2 - lo2);
}

double envelope_gap(const CouplingTensor& coupling, const CapacityBounds& bounds, Asset own, int t,
                    std::size_t point) {
  const int n = coupling.horizon();
  require(t >= 1 && t < n, "envelope time index must lie in 1..N-1");
  const Shape full = coupling.shape();
  const ProjectionKey ka{full_with_other_kind(own), t}, kb{prefix_kind(own), t}, kc{prefix_with_other_kind(own), t},
      kd{full_kind(own), 0};
  const auto pa = project(coupling, ka);
  require(point < pa.values.size(), "envelope point outside the grid");
  const auto pb = project(coupling, kb), pc = project(coupling, kc), pd = project(coupling, kd);
  const auto ib = sub_index_map(full, pa.axes, pb.axes), ic = sub_index_map(full, pa.axes, pc.axes),
             id = sub_index_map(full, pa.axes, pd.axes);
  const auto &ta = bounds.at(ka), &tb = bounds.at(kb), &tc = bounds.at(kc), &td = bounds.at(kd);
  const std::size_t b = ib[point], c = ic[point], d = id[point];
  return envelope_gap(pa.values[point], ta.lower[point], ta.upper[point], pb.values[b], tb.lower[b], tb.upper[b],
                      pc.values[c], tc.lower[c], tc.upper[c], pd.values[d], td.lower[d], td.upper[d]);
}

}  // namespace mcmot
