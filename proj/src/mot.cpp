#include "mcmot/mot.hpp"

#include <algorithm>
#include <cmath>

#include "mcmot/error.hpp"

namespace mcmot {

std::vector<std::size_t> joint_history_axes(int t, int horizon) {
  std::vector<std::size_t> axes;
  for (int s = 0; s < t; ++s) axes.push_back(static_cast<std::size_t>(s));
  for (int s = 0; s < t; ++s) axes.push_back(static_cast<std::size_t>(horizon + s));
  return axes;
}

MotLayout add_mot_core(lp::LinearProgram& lp, const MarginalSystem& system, std::span<const double> payoff) {
  require(lp.num_vars() == 0, "coupling columns must come first");
  MotLayout layout;
  layout.grid = ProductGrid::of(system);
  layout.shape = layout.grid.shape();
  layout.num_pi = layout.grid.size();
  require(payoff.size() == layout.num_pi, "payoff tensor does not match the product grid");
  const int n = system.horizon();

  for (std::size_t k = 0; k < layout.num_pi; ++k) lp.add_var(0.0, 1.0, payoff[k]);

  for (Asset a : {Asset::X, Asset::Y}) {
    for (int t = 1; t <= n; ++t) {
      const std::size_t axis = layout.grid.axis(a, t);
      std::vector<std::vector<lp::Term>> rows(layout.shape[axis]);
      MultiIndex mi(layout.shape.size(), 0);
      for (std::size_t k = 0; k < layout.num_pi; ++k) {
        rows[mi[axis]].push_back({static_cast<int>(k), 1.0});
        next_index(mi, layout.shape);
      }
      const auto& masses = system.law(a, t).masses();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        int r = lp.add_row(std::move(rows[i]), lp::Sense::Equal, masses[i],
                           std::string("marg_") + asset_name(a) + std::to_string(t) + "[" + std::to_string(i) + "]");
        layout.marginal_rows.push_back({a, t, i, r});
      }
    }
  }

  for (int t = 1; t < n; ++t) {
    const auto hist = joint_history_axes(t, n);
    AxisMap map(layout.shape, hist);
    for (Asset a : {Asset::X, Asset::Y}) {
      const std::size_t now = layout.grid.axis(a, t), next = layout.grid.axis(a, t + 1);
      std::vector<std::vector<lp::Term>> rows(map.sub_size());
      MultiIndex mi(layout.shape.size(), 0);
      for (std::size_t k = 0; k < layout.num_pi; ++k) {
        const double step = layout.grid.axis_points[next][mi[next]] - layout.grid.axis_points[now][mi[now]];
        if (step != 0.0) rows[map(mi)].push_back({static_cast<int>(k), step});
        next_index(mi, layout.shape);
      }
      for (std::size_t h = 0; h < rows.size(); ++h) {
        if (rows[h].empty()) continue;
        int r = lp.add_row(std::move(rows[h]), lp::Sense::Equal, 0.0,
                           std::string("mart_") + asset_name(a) + std::to_string(t) + "[" + std::to_string(h) + "]");
        layout.martingale_rows.push_back({a, t, h, r});
      }
    }
  }
  return layout;
}

lp::LinearProgram build_mot_lp(const MotInstance& instance) {
  lp::LinearProgram lp;
  lp.direction = instance.direction;
  add_mot_core(lp, instance.system, tabulate(instance.payoff, instance.system));
  return lp;
}

ResidualSummary residuals_of(const CouplingTensor& coupling) {
  ResidualSummary r;
  r.martingale = martingale_residual(coupling);
  for (int t = 1; t < coupling.horizon(); ++t) {
    r.causality = std::max(r.causality, causality_residual(coupling, t));
    r.anticausality = std::max(r.anticausality, anticausality_residual(coupling, t));
  }
  return r;
}

HedgeReport extract_dual_hedge(const lp::LinearProgram& lp, const lp::LPSolution& solution, const MotLayout& layout,
                               lp::Direction direction) {
  if (solution.status != lp::Status::Optimal)
    fail(ErrorCategory::Numerical, "hedge extraction needs an optimal solution");
  const int n = layout.grid.horizon;
  HedgeReport h;
  std::vector<char> kind(lp.num_rows(), 0);  // 1 static, 2 dynamic, 0 other
  for (Asset a : {Asset::X, Asset::Y}) {
    auto& st = h.static_legs[static_cast<int>(a)];
    auto& dy = h.dynamic_legs[static_cast<int>(a)];
    for (int t = 1; t <= n; ++t) st.emplace_back(layout.shape[layout.grid.axis(a, t)], 0.0);
    for (int t = 1; t < n; ++t) {
      std::size_t size = 1;
      for (auto ax : joint_history_axes(t, n)) size *= layout.shape[ax];
      dy.emplace_back(size, 0.0);
    }
  }
  for (const auto& r : layout.marginal_rows) {
    h.static_legs[static_cast<int>(r.asset)][r.t - 1][r.point] = solution.duals[r.row];
    kind[r.row] = 1;
  }
  for (const auto& r : layout.martingale_rows) {
    h.dynamic_legs[static_cast<int>(r.asset)][r.t - 1][r.history] = solution.duals[r.row];
    kind[r.row] = 2;
  }

  std::vector<double> portfolio(layout.num_pi, 0.0), other(layout.num_pi, 0.0);
  bool has_other = false;
  for (int i = 0; i < lp.num_rows(); ++i) {
    const double y = solution.duals[i];
    if (y == 0.0) continue;
    for (const auto& term : lp.row(i).terms) {
      if (static_cast<std::size_t>(term.var) >= layout.num_pi) continue;
      portfolio[term.var] += y * term.coef;
      if (kind[i] == 0) {
        other[term.var] += y * term.coef;
        has_other = true;
      }
    }
  }
  if (has_other) h.causal_legs = std::move(other);

  const double sign = direction == lp::Direction::Minimize ? 1.0 : -1.0;
  h.subhedge_slack = lp::kInf;
  for (std::size_t k = 0; k < layout.num_pi; ++k) {
    // A column sitting at its upper bound carries a bound multiplier instead.
    if (solution.primal[k] >= lp.upper(static_cast<int>(k)) - 1e-12) continue;
    h.subhedge_slack = std::min(h.subhedge_slack, sign * (lp.cost(static_cast<int>(k)) - portfolio[k]));
  }
  if (!std::isfinite(h.subhedge_slack)) h.subhedge_slack = 0.0;

  h.dual_value = lp.constant();
  for (int i = 0; i < lp.num_rows(); ++i) h.dual_value += solution.duals[i] * lp.row(i).rhs;
  for (int j = 0; j < lp.num_vars(); ++j) h.dual_value += solution.reduced_costs[j] * solution.primal[j];
  h.duality_gap = std::abs(solution.objective_value - h.dual_value);
  const double scale = 1.0 + std::abs(solution.objective_value);
  if (h.duality_gap > 1e-6 * scale)
    fail(ErrorCategory::Numerical, "dual objective differs from the primal bound by " + std::to_string(h.duality_gap));
  if (h.subhedge_slack < -1e-7)
    fail(ErrorCategory::Numerical,
         "sub-hedging inequality violated by " + std::to_string(-h.subhedge_slack));
  return h;
}

BoundResult finish_bound(const std::string& method, const lp::LinearProgram& lp, const lp::LPSolution& solution,
                         const MotLayout& layout, lp::Direction direction) {
  if (solution.status == lp::Status::Infeasible)
    fail(ErrorCategory::Infeasible, method + " LP is infeasible; check convex order and capacity bounds");
  if (solution.status != lp::Status::Optimal)
    fail(ErrorCategory::Numerical, method + " LP ended with status " + lp::status_name(solution.status));
  BoundResult out;
  out.method = method;
  out.direction = direction;
  out.value = solution.objective_value;
  out.coupling = CouplingTensor::from_solver(
      layout.grid, std::span<const double>(solution.primal.data(), layout.num_pi));
  out.hedge = extract_dual_hedge(lp, solution, layout, direction);
  out.residuals = residuals_of(out.coupling);
  out.lp_rows = lp.num_rows();
  out.lp_cols = lp.num_vars();
  out.iterations = solution.iterations;
  return out;
}

BoundResult solve_mot(const MotInstance& instance, const lp::SolverConfig& config) {
  lp::LinearProgram lp;
  lp.direction = instance.direction;
  auto layout = add_mot_core(lp, instance.system, tabulate(instance.payoff, instance.system));
  auto sol = lp::solve(lp, config);
  return finish_bound("mot", lp, sol, layout, instance.direction);
}

}  // namespace mcmot
