#include "mcmot/bnb.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <memory>
#include <queue>

#include "mcmot/error.hpp"

namespace mcmot {

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::GapClosed: return "gap-closed";
    case Termination::NodeBudget: return "node-budget";
    case Termination::TimeBudget: return "time-budget";
  }
  return "unknown";
}

namespace {

double expectation(const CouplingTensor& c, std::span<const double> payoff) {
  double v = 0.0;
  for (std::size_t k = 0; k < payoff.size(); ++k) v += c.masses()[k] * payoff[k];
  return v;
}

bool within_capacity(const CouplingTensor& c, const CapacityBounds& bounds, double tol) {
  for (const auto& [key, tab] : bounds.tables) {
    auto p = project(c, key);
    for (std::size_t k = 0; k < p.values.size(); ++k)
      if (p.values[k] < tab.lower[k] - tol || p.values[k] > tab.upper[k] + tol) return false;
  }
  return true;
}

std::vector<std::size_t> index_of_entries(const Shape& shape, const ProjectionKey& key, int horizon) {
  const auto axes = kept_axes(key, horizon);
  AxisMap map(shape, axes);
  std::vector<std::size_t> out(element_count(shape));
  MultiIndex mi(shape.size(), 0);
  for (auto& v : out) {
    v = map(mi);
    next_index(mi, shape);
  }
  return out;
}

void add_fixed_projection(lp::LinearProgram& lp, const MotLayout& layout, const ProjectionKey& key,
                          const std::vector<double>& values) {
  const auto idx = index_of_entries(layout.shape, key, layout.grid.horizon);
  std::vector<std::vector<lp::Term>> rows(values.size());
  for (std::size_t k = 0; k < layout.num_pi; ++k) rows[idx[k]].push_back({static_cast<int>(k), 1.0});
  for (std::size_t e = 0; e < rows.size(); ++e)
    lp.add_row(std::move(rows[e]), lp::Sense::Equal, values[e], std::string("fix_") + kind_name(key.kind));
}

enum class Freeze { FullPaths, Prefixes };

// One alternating step: the bilinear equations become linear once either the
// full-path laws or the prefix projections are frozen at `cur`.
std::optional<CouplingTensor> alternating_step(const CouplingTensor& cur, const McCormickInstance& inst,
                                               std::span<const double> payoff, std::array<Freeze, 2> modes,
                                               const lp::SolverConfig& cfg) {
  lp::LinearProgram lp;
  lp.direction = inst.direction;
  auto layout = add_mot_core(lp, inst.system, payoff);
  const int n = layout.grid.horizon;
  const Shape& shape = layout.shape;

  for (Asset own : {Asset::X, Asset::Y}) {
    const Freeze freeze = modes[static_cast<int>(own)];
    const ProjectionKey kd{full_kind(own), 0};
    const auto full = project(cur, kd).values;
    const auto id_pi = index_of_entries(shape, kd, n);
    if (freeze == Freeze::FullPaths) add_fixed_projection(lp, layout, kd, full);
    for (int t = 1; t < n; ++t) {
      const ProjectionKey ka{full_with_other_kind(own), t}, kb{prefix_kind(own), t},
          kc{prefix_with_other_kind(own), t};
      const auto pre = project(cur, kb).values;
      const auto pre_other = project(cur, kc).values;
      const auto ia_pi = index_of_entries(shape, ka, n);
      const auto ic_pi = index_of_entries(shape, kc, n);
      const auto axes_a = kept_axes(ka, n);
      const auto ib = sub_index_map(shape, axes_a, kept_axes(kb, n));
      const auto ic = sub_index_map(shape, axes_a, kept_axes(kc, n));
      const auto id = sub_index_map(shape, axes_a, kept_axes(kd, n));

      // Group coupling columns by the entry that spans each row.
      const auto& group_of = freeze == Freeze::FullPaths ? ic_pi : id_pi;
      const std::size_t groups = freeze == Freeze::FullPaths ? pre_other.size() : full.size();
      std::vector<std::vector<std::size_t>> members(groups);
      for (std::size_t k = 0; k < layout.num_pi; ++k) members[group_of[k]].push_back(k);

      if (freeze == Freeze::Prefixes) {
        add_fixed_projection(lp, layout, kb, pre);
        add_fixed_projection(lp, layout, kc, pre_other);
      }
      for (std::size_t p = 0; p < ib.size(); ++p) {
        std::vector<lp::Term> terms;
        if (freeze == Freeze::FullPaths) {
          // π(a,b_t)·P(a_{1:t}) − π(a_{1:t},b_t)·P(a) with P frozen
          if (pre[ib[p]] == 0.0) continue;
          for (auto k : members[ic[p]]) {
            double coef = -full[id[p]] + (ia_pi[k] == p ? pre[ib[p]] : 0.0);
            if (coef != 0.0) terms.push_back({static_cast<int>(k), coef});
          }
        } else {
          // π(a,b_t)·A(a_{1:t}) − C(a_{1:t},b_t)·π(a) with A, C frozen
          for (auto k : members[id[p]]) {
            double coef = -pre_other[ic[p]] + (ia_pi[k] == p ? pre[ib[p]] : 0.0);
            if (coef != 0.0) terms.push_back({static_cast<int>(k), coef});
          }
        }
        if (!terms.empty()) lp.add_row(std::move(terms), lp::Sense::Equal, 0.0, "bilinear");
      }
    }
  }
  auto sol = lp::solve(lp, cfg);
  if (sol.status != lp::Status::Optimal) return std::nullopt;
  try {
    return CouplingTensor::from_solver(layout.grid, std::span<const double>(sol.primal.data(), layout.num_pi));
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Glues a joint law of (x_1, y_1) to each asset's own path kernel taken from
// `c`. Bicausal and martingale by construction.
CouplingTensor decoupled_start(const CouplingTensor& c, const std::vector<double>& first) {
  const int n = c.horizon();
  const Shape shape = c.shape();
  std::vector<std::vector<double>> xp, yp;
  std::vector<std::vector<std::size_t>> xi, yi;
  for (int t = 1; t <= n; ++t) {
    xp.push_back(project(c, {ProjectionKind::XPrefix, t}).values);
    yp.push_back(project(c, {ProjectionKind::YPrefix, t}).values);
    xi.push_back(index_of_entries(shape, {ProjectionKind::XPrefix, t}, n));
    yi.push_back(index_of_entries(shape, {ProjectionKind::YPrefix, t}, n));
  }
  const auto fi = index_of_entries(shape, {ProjectionKind::XPrefixWithYt, 1}, n);
  std::vector<double> m(c.masses().size(), 0.0);
  for (std::size_t k = 0; k < m.size(); ++k) {
    double v = first[fi[k]];
    for (int t = 1; t < n && v > 0.0; ++t) {
      const double px = xp[t - 1][xi[t - 1][k]], py = yp[t - 1][yi[t - 1][k]];
      v = (px > 0.0 && py > 0.0) ? v * (xp[t][xi[t][k]] / px) * (yp[t][yi[t][k]] / py) : 0.0;
    }
    m[k] = v;
  }
  return CouplingTensor::from_solver(c.grid(), m);
}

// North-west corner rule; `reverse` walks the second law from the top.
std::vector<double> monotone_joint(const std::vector<double>& mu, const std::vector<double>& nu, bool reverse) {
  std::vector<double> out(mu.size() * nu.size(), 0.0);
  std::vector<double> a = mu, b = nu;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const std::size_t jj = reverse ? b.size() - 1 - j : j;
    const double q = std::min(a[i], b[jj]);
    out[i * nu.size() + jj] += q;
    a[i] -= q;
    b[jj] -= q;
    if (a[i] <= 1e-15) ++i;
    else ++j;
  }
  return out;
}

std::optional<RepairResult> polish_from(const CouplingTensor& start, const McCormickInstance& instance,
                                        std::span<const double> payoff, const RepairConfig& config,
                                        int first_mode) {
  const double sign = instance.direction == lp::Direction::Minimize ? 1.0 : -1.0;
  std::optional<RepairResult> best;
  CouplingTensor cur = start;
  // Cycle through the four ways of freezing one side of each bilinear equation.
  static constexpr std::array<std::array<Freeze, 2>, 4> kModes{{{Freeze::FullPaths, Freeze::FullPaths},
                                                               {Freeze::Prefixes, Freeze::Prefixes},
                                                               {Freeze::FullPaths, Freeze::Prefixes},
                                                               {Freeze::Prefixes, Freeze::FullPaths}}};
  int stale = 0;
  for (int it = 0; it < config.max_iterations && stale < 4; ++it) {
    auto next = alternating_step(cur, instance, payoff, kModes[(first_mode + it) % 4], config.lp);
    ++stale;
    if (!next) continue;
    const bool ok = max_bicausal_residual(*next) <= config.residual_tolerance &&
                    martingale_residual(*next) <= 1e-8 && within_capacity(*next, instance.bounds, 1e-9);
    if (!ok) continue;
    const double value = expectation(*next, payoff);
    if (!best || sign * value < sign * best->value - config.improvement_tolerance) stale = 0;
    if (!best || sign * value < sign * best->value) best = RepairResult{*next, value, it + 1};
    cur = *next;
  }
  return best;
}

}  // namespace

std::optional<RepairResult> polish_bicausal(const CouplingTensor& start, const McCormickInstance& instance,
                                            const RepairConfig& config) {
  const auto payoff = tabulate(instance.payoff, instance.system);
  const double sign = instance.direction == lp::Direction::Minimize ? 1.0 : -1.0;
  auto best = polish_from(start, instance, payoff, config, 0);
  if (start.horizon() < 2) return best;
  // Extra starts: the first-period joint of `start` and the two monotone
  // joints, each glued to the single-asset path kernels. These begin with the
  // prefix-frozen step so the chosen joint survives the first solve.
  const auto& mu = instance.system.law(Asset::X, 1).masses();
  const auto& nu = instance.system.law(Asset::Y, 1).masses();
  const std::vector<std::vector<double>> firsts{project(start, {ProjectionKind::XPrefixWithYt, 1}).values,
                                                monotone_joint(mu, nu, false), monotone_joint(mu, nu, true)};
  for (const auto& first : firsts) {
    auto alt = polish_from(decoupled_start(start, first), instance, payoff, config, 1);
    if (alt && (!best || sign * alt->value < sign * best->value)) best = alt;
  }
  return best;
}

std::optional<RepairResult> repair_incumbent(const CouplingTensor& coupling, const McCormickInstance& instance,
                                             const RepairConfig& config) {
  if (max_bicausal_residual(coupling) <= config.residual_tolerance && martingale_residual(coupling) <= 1e-8 &&
      within_capacity(coupling, instance.bounds, 1e-9))
    return RepairResult{coupling, expectation(coupling, tabulate(instance.payoff, instance.system)), 0};
  return polish_bicausal(coupling, instance, config);
}

std::optional<BranchChoice> select_branch(const McCormickProgram& program, const lp::LPSolution& solution,
                                          const CapacityBounds& box, double tol) {
  constexpr double kMinWidth = 1e-6;
  const auto& x = solution.primal;
  std::optional<BranchChoice> best;
  for (const auto& blk : program.envelopes) {
    const auto &ta = box.at(blk.key_a), &tb = box.at(blk.key_b), &tc = box.at(blk.key_c), &td = box.at(blk.key_d);
    const int fa = program.aux_first.at(blk.key_a), fb = program.aux_first.at(blk.key_b),
              fc = program.aux_first.at(blk.key_c), fd = program.aux_first.at(blk.key_d);
    for (std::size_t p = 0; p < blk.points; ++p) {
      const std::size_t b = blk.ib[p], c = blk.ic[p], d = blk.id[p];
      const double va = x[fa + p], vb = x[fb + b], vc = x[fc + c], vd = x[fd + d];
      const double viol = std::abs(va * vb - vc * vd);
      if (viol <= tol) continue;
      const double gap = envelope_gap(va, ta.lower[p], ta.upper[p], vb, tb.lower[b], tb.upper[b], vc, tc.lower[c],
                                      tc.upper[c], vd, td.lower[d], td.upper[d]);
      double dual_weight = 1e-6;
      for (int r = 0; r < 8; ++r) dual_weight += std::abs(solution.duals[blk.row_first + 8 * static_cast<int>(p) + r]);

      struct Factor {
        const ProjectionKey* key;
        std::size_t entry;
        double value, lo, up;
      };
      const Factor pairs[2][2] = {{{&blk.key_a, p, va, ta.lower[p], ta.upper[p]}, {&blk.key_b, b, vb, tb.lower[b], tb.upper[b]}},
                                  {{&blk.key_c, c, vc, tc.lower[c], tc.upper[c]}, {&blk.key_d, d, vd, td.lower[d], td.upper[d]}}};
      for (const auto& pr : pairs) {
        const double w0 = pr[0].up - pr[0].lo, w1 = pr[1].up - pr[1].lo;
        const double score = w0 * w1 * dual_weight * (gap + viol);
        if (score <= 0.0) continue;
        const Factor& f = w0 >= w1 ? pr[0] : pr[1];
        const double width = f.up - f.lo;
        if (width <= kMinWidth) continue;
        if (best && score <= best->score) continue;
        const double split = std::clamp(f.value, f.lo + 0.1 * width, f.up - 0.1 * width);
        best = BranchChoice{*f.key, f.entry, split, score};
      }
    }
  }
  return best;
}

std::optional<std::pair<BnBNode, BnBNode>> branch(const BnBNode& node, const McCormickProgram& program, double tol) {
  auto choice = select_branch(program, node.solution, node.box, tol);
  if (!choice) return std::nullopt;
  BnBNode left, right;
  left.depth = right.depth = node.depth + 1;
  left.relaxation_value = right.relaxation_value = node.relaxation_value;
  left.box = node.box;
  right.box = node.box;
  left.box.at(choice->key).upper[choice->entry] = choice->split;
  right.box.at(choice->key).lower[choice->entry] = choice->split;
  return std::make_pair(std::move(left), std::move(right));
}

namespace {

struct OpenNode {
  double key;
  int id;
  std::shared_ptr<BnBNode> node;
  bool operator>(const OpenNode& o) const { return key != o.key ? key > o.key : id > o.id; }
};

}  // namespace

BnBReport solve_bicausal(const McCormickInstance& instance, const BnBConfig& config) {
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - started).count(); };

  const auto validation = validate_system(instance.system);
  if (!validation.pass) fail(ErrorCategory::InvalidInput, "marginals fail validation: " + validation.problems.front());
  const auto payoff = tabulate(instance.payoff, instance.system);
  const double sign = instance.direction == lp::Direction::Minimize ? 1.0 : -1.0;
  const double tol = config.residual_tolerance;

  CapacityBounds root_box = instance.bounds;
  root_box.validate(ProductGrid::of(instance.system));
  // Single-coordinate prefix families equal a marginal; pin them.
  for (Asset a : {Asset::X, Asset::Y}) {
    if (instance.system.horizon() < 2) break;
    auto& tab = root_box.at({prefix_kind(a), 1});
    const auto& m = instance.system.law(a, 1).masses();
    for (std::size_t i = 0; i < m.size(); ++i)
      if (tab.lower[i] <= m[i] && m[i] <= tab.upper[i]) tab.lower[i] = tab.upper[i] = m[i];
  }

  BnBReport report;
  report.direction = instance.direction;

  RepairConfig rcfg;
  rcfg.residual_tolerance = tol;
  rcfg.max_iterations = config.repair_iterations;
  rcfg.lp = config.lp;

  double inc_key = lp::kInf;
  auto offer = [&](const CouplingTensor& c) {
    if (max_bicausal_residual(c) > tol || martingale_residual(c) > 1e-8 || !within_capacity(c, instance.bounds, 1e-9))
      return;
    const double key = sign * expectation(c, payoff);
    if (key < inc_key - 1e-12) {
      inc_key = key;
      report.incumbent = c;
      ++report.incumbent_updates;
    }
  };
  offer(independent_martingale_coupling(instance.system));

  auto root_prog = build_mccormick_program(instance.system, payoff, root_box, instance.direction);
  auto solve_box = [&](const CapacityBounds& box, const std::vector<lp::BasisStatus>* warm) {
    auto prog = build_mccormick_program(instance.system, payoff, box, instance.direction);
    lp::SolverConfig cfg = config.lp;
    if (warm) cfg.warm_basis = *warm;
    auto sol = lp::solve(prog.lp, cfg);
    if (sol.status == lp::Status::NumericalFailure || sol.status == lp::Status::IterationLimit) {
      cfg.warm_basis.clear();
      sol = lp::solve(prog.lp, cfg);
    }
    return sol;
  };

  auto root = std::make_shared<BnBNode>();
  root->box = root_box;
  root->solution = lp::solve(root_prog.lp, config.lp);
  if (root->solution.status == lp::Status::Infeasible)
    fail(ErrorCategory::Infeasible, "root McCormick relaxation is infeasible; check the capacity bounds");
  if (root->solution.status != lp::Status::Optimal)
    fail(ErrorCategory::Numerical, std::string("root relaxation ended with status ") +
                                       lp::status_name(root->solution.status));
  root->relaxation_value = root->solution.objective_value;
  report.root_relaxation = root->relaxation_value;

  std::priority_queue<OpenNode, std::vector<OpenNode>, std::greater<>> open;
  open.push({sign * root->relaxation_value, 0, root});
  int next_id = 1;
  double settled_key = lp::kInf;  // smallest bound among pruned or unsplittable regions
  report.terminated = Termination::GapClosed;

  while (!open.empty()) {
    if (open.top().key >= inc_key - config.gap_tolerance) {
      settled_key = std::min(settled_key, open.top().key);
      open.pop();
      continue;
    }
    if (report.nodes_explored >= config.node_budget) {
      report.terminated = Termination::NodeBudget;
      break;
    }
    if (elapsed() > config.time_budget_seconds) {
      report.terminated = Termination::TimeBudget;
      break;
    }

    // Pop a batch (one node in single-worker mode).
    std::vector<OpenNode> batch;
    while (!open.empty() && static_cast<int>(batch.size()) < std::max(1, config.workers) &&
           open.top().key < inc_key - config.gap_tolerance) {
      batch.push_back(open.top());
      open.pop();
    }

    std::vector<std::pair<std::shared_ptr<BnBNode>, std::shared_ptr<BnBNode>>> kids(batch.size());
    std::vector<char> splittable(batch.size(), 0);
    for (std::size_t q = 0; q < batch.size(); ++q) {
      auto& node = *batch[q].node;
      ++report.nodes_explored;
      auto coupling = CouplingTensor::from_solver(
          root_prog.layout.grid, std::span<const double>(node.solution.primal.data(), root_prog.layout.num_pi));
      const double r = max_bicausal_residual(coupling);
      if (r <= tol) {
        // The relaxation optimum is itself bicausal: this region is solved.
        offer(coupling);
        settled_key = std::min(settled_key, batch[q].key);
        continue;
      }
      if (r <= 10.0 * tol || (report.nodes_explored - 1) % config.repair_every == 0) {
        if (auto rep = repair_incumbent(coupling, instance, rcfg)) offer(rep->coupling);
      }
      auto children = branch(node, root_prog, tol);
      if (!children) {
        settled_key = std::min(settled_key, batch[q].key);
        continue;
      }
      splittable[q] = 1;
      kids[q] = {std::make_shared<BnBNode>(std::move(children->first)),
                 std::make_shared<BnBNode>(std::move(children->second))};
    }

    std::vector<BnBNode*> to_solve;
    std::vector<const std::vector<lp::BasisStatus>*> warm;
    for (std::size_t q = 0; q < batch.size(); ++q) {
      if (!splittable[q]) continue;
      for (auto* child : {kids[q].first.get(), kids[q].second.get()}) {
        child->id = next_id++;
        to_solve.push_back(child);
        warm.push_back(&batch[q].node->solution.basis);
      }
    }
#pragma omp parallel for num_threads(std::max(1, config.workers)) schedule(static, 1) if (config.workers > 1)
    for (std::size_t k = 0; k < to_solve.size(); ++k) to_solve[k]->solution = solve_box(to_solve[k]->box, warm[k]);

    for (std::size_t q = 0; q < batch.size(); ++q) {
      if (!splittable[q]) continue;
      for (auto& child : {kids[q].first, kids[q].second}) {
        const auto status = child->solution.status;
        if (status == lp::Status::Infeasible) continue;
        if (status != lp::Status::Optimal) {
          // No usable relaxation: the parent's bound still holds for this region.
          settled_key = std::min(settled_key, batch[q].key);
          continue;
        }
        const double key = std::max(sign * child->solution.objective_value, batch[q].key);
        child->relaxation_value = sign * key;
        if (key >= inc_key - config.gap_tolerance) {
          settled_key = std::min(settled_key, key);
          continue;
        }
        open.push({key, child->id, child});
      }
    }
  }

  double lower_key = std::min(settled_key, inc_key);
  if (!open.empty()) lower_key = std::min(lower_key, open.top().key);
  report.nodes_open = static_cast<long>(open.size());
  if (report.terminated == Termination::GapClosed && inc_key - lower_key > config.gap_tolerance)
    report.terminated = Termination::NodeBudget;

  report.incumbent_value = sign * inc_key;
  if (sign > 0) {
    report.lower_bound = lower_key;
    report.upper_bound = inc_key;
  } else {
    report.lower_bound = -inc_key;
    report.upper_bound = -lower_key;
  }
  if (report.incumbent) {
    report.max_residual_of_incumbent = max_bicausal_residual(*report.incumbent);
    report.incumbent_martingale_residual = martingale_residual(*report.incumbent);
  }
  report.seconds = elapsed();
  return report;
}

}  // namespace mcmot
