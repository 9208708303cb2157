// Bounded revised primal simplex.
//
// Every row i gets a logical r_i with A x − r = 0 and r_i bounded by the row
// sense, so the all-logical basis is always available. Phase 1 minimizes the
// sum of bound violations of basic variables (composite costs recomputed each
// iteration); phase 2 minimizes the true objective. The basis inverse is kept
// as a sparse LU of the last refactorized basis followed by an eta file.

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "mcmot/error.hpp"
#include "mcmot/kernels.hpp"
#include "mcmot/lp.hpp"

namespace mcmot::lp {
namespace {

using Vec = Eigen::VectorXd;

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const SolverConfig& cfg) : lp_(lp), cfg_(cfg) {
    m_ = lp.num_rows();
    n_ = lp.num_vars();
    ncol_ = n_ + m_;
    sign_ = lp.direction == Direction::Maximize ? -1.0 : 1.0;
    ftol_ = std::min(1e-9, 0.1 * cfg.feasibility_tol);
    dtol_ = cfg.optimality_tol;

    // Structural columns in CSC form.
    a_.rows = m_;
    a_.cols = n_;
    a_.start.assign(n_ + 1, 0);
    for (const auto& row : lp.rows())
      for (const auto& t : row.terms) ++a_.start[t.var + 1];
    for (int j = 0; j < n_; ++j) a_.start[j + 1] += a_.start[j];
    a_.index.resize(a_.start[n_]);
    a_.value.resize(a_.start[n_]);
    std::vector<int> fill(a_.start.begin(), a_.start.end() - 1);
    for (int i = 0; i < m_; ++i)
      for (const auto& t : lp.row(i).terms) {
        a_.index[fill[t.var]] = i;
        a_.value[fill[t.var]++] = t.coef;
      }

    lo_.resize(ncol_);
    up_.resize(ncol_);
    cost_.assign(ncol_, 0.0);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = lp.lower(j);
      up_[j] = lp.upper(j);
      cost_[j] = sign_ * lp.cost(j);
    }
    for (int i = 0; i < m_; ++i) {
      const auto& row = lp.row(i);
      lo_[n_ + i] = row.sense == Sense::LessEqual ? -kInf : row.rhs;
      up_[n_ + i] = row.sense == Sense::GreaterEqual ? kInf : row.rhs;
    }
    max_iter_ = cfg.max_iterations > 0 ? cfg.max_iterations : 200L * (m_ + n_) + 1000;
  }

  LPSolution run() {
    if (!cfg_.warm_basis.empty() && install_warm_basis()) {
      if (!refactor()) slack_basis();
    } else {
      slack_basis();
    }
    if (!factor_ok_ && !refactor()) return finish(Status::NumericalFailure);

    int refinements = 0;
    int degenerate_run = 0;
    bool bland = false;
    Vec y(m_), cb(m_), alpha(m_);
    std::vector<double> d(ncol_, 0.0);
    std::vector<double> zero_cost(n_, 0.0);

    while (true) {
      if (iterations_ >= max_iter_) return finish(Status::IterationLimit);
      if (static_cast<int>(etas_.size()) >= cfg_.refactor_interval && !refactor() && !recover())
        return finish(Status::NumericalFailure);

      const bool phase1 = infeasibility() > ftol_;
      for (int i = 0; i < m_; ++i) {
        const int j = head_[i];
        if (phase1) cb[i] = x_[j] < lo_[j] - ftol_ ? -1.0 : (x_[j] > up_[j] + ftol_ ? 1.0 : 0.0);
        else cb[i] = cost_[j];
      }
      y = cb;
      btran(y);
      price(y, phase1 ? zero_cost : cost_, d);

      int q = -1;
      double best = 0.0;
      for (int j = 0; j < ncol_; ++j) {
        if (status_[j] == BasisStatus::Basic || lo_[j] == up_[j]) continue;
        const double dj = d[j];
        bool eligible = false;
        switch (status_[j]) {
          case BasisStatus::AtLower: eligible = dj < -dtol_; break;
          case BasisStatus::AtUpper: eligible = dj > dtol_; break;
          case BasisStatus::Free: eligible = std::abs(dj) > dtol_; break;
          default: break;
        }
        if (!eligible) continue;
        if (bland) {
          q = j;
          break;
        }
        if (std::abs(dj) > best) {
          best = std::abs(dj);
          q = j;
        }
      }

      if (q < 0) {
        // No improving column: confirm with a fresh factorization before concluding.
        if (!refactor() && !recover()) return finish(Status::NumericalFailure);
        if (phase1) {
          if (infeasibility() > ftol_) {
            if (++refinements > 3) return finish(Status::Infeasible);
            continue;
          }
          continue;  // became feasible after refactor
        }
        if (infeasibility() > ftol_) continue;  // drifted; go back to phase 1
        if (dual_infeasibility() <= dtol_ || ++refinements > 5) return finish(Status::Optimal);
        continue;
      }

      const double dir = d[q] < 0.0 ? 1.0 : -1.0;
      column(q, alpha);
      ftran(alpha);

      // Harris two-pass ratio test. delta_i is the rate of change of basic i.
      double theta_max = kInf;
      for (int i = 0; i < m_; ++i) {
        const double delta = -dir * alpha[i];
        if (std::abs(alpha[i]) <= cfg_.pivot_tol) continue;
        double target;
        if (!blocking_bound(i, delta, target)) continue;
        const double relaxed = (std::abs(x_[head_[i]] - target) + ftol_) / std::abs(delta);
        theta_max = std::min(theta_max, relaxed);
      }
      const double range = up_[q] - lo_[q];
      int p = -1;
      double theta = kInf, p_target = 0.0, p_mag = 0.0;
      if (theta_max < kInf) {
        for (int i = 0; i < m_; ++i) {
          const double delta = -dir * alpha[i];
          if (std::abs(alpha[i]) <= cfg_.pivot_tol) continue;
          double target;
          if (!blocking_bound(i, delta, target)) continue;
          const double ratio = std::max(0.0, (target - x_[head_[i]]) / delta);
          if (ratio > theta_max) continue;
          const double mag = std::abs(alpha[i]);
          const bool take = p < 0 || (bland ? head_[i] < head_[p] : mag > p_mag * (1 + 1e-12) ||
                                                                        (mag >= p_mag * (1 - 1e-12) && head_[i] < head_[p]));
          if (take) {
            p = i;
            p_mag = mag;
            p_target = target;
            theta = ratio;
          }
        }
      }

      const bool flip = std::isfinite(range) && (p < 0 || range <= theta);
      if (p < 0 && !flip) {
        if (phase1) {
          // Cannot happen with exact arithmetic; treat as numerical drift.
          if (!refactor() && !recover()) return finish(Status::NumericalFailure);
          if (++refinements > 3) return finish(Status::NumericalFailure);
          continue;
        }
        return finish(Status::Unbounded);
      }
      if (flip) theta = range;

      ++iterations_;
      if (theta * std::abs(d[q]) < 1e-12) {
        if (++degenerate_run > 50) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }

      x_[q] += dir * theta;
      for (int i = 0; i < m_; ++i) x_[head_[i]] += -dir * alpha[i] * theta;

      if (flip) {
        const bool to_upper = dir > 0;
        status_[q] = to_upper ? BasisStatus::AtUpper : BasisStatus::AtLower;
        x_[q] = to_upper ? up_[q] : lo_[q];
        continue;
      }

      const int leaving = head_[p];
      x_[leaving] = p_target;
      status_[leaving] = (p_target == lo_[leaving]) ? BasisStatus::AtLower : BasisStatus::AtUpper;
      pos_[leaving] = -1;
      head_[p] = q;
      pos_[q] = p;
      status_[q] = BasisStatus::Basic;
      push_eta(p, alpha);
    }
  }

 private:
  // Target bound that basic row i runs into when moving with rate delta, or
  // false if it never blocks. Infeasible basics block where they become feasible.
  bool blocking_bound(int i, double delta, double& target) const {
    const int j = head_[i];
    const double v = x_[j];
    if (delta < 0.0) {
      if (v > up_[j] + ftol_) { target = up_[j]; return true; }
      if (v >= lo_[j] - ftol_ && std::isfinite(lo_[j])) { target = lo_[j]; return true; }
      return false;
    }
    if (v < lo_[j] - ftol_) { target = lo_[j]; return true; }
    if (v <= up_[j] + ftol_ && std::isfinite(up_[j])) { target = up_[j]; return true; }
    return false;
  }

  void column(int j, Vec& out) const {
    out.setZero(m_);
    if (j < n_) {
      for (int p = a_.start[j]; p < a_.start[j + 1]; ++p) out[a_.index[p]] += a_.value[p];
    } else {
      out[j - n_] = -1.0;
    }
  }

  void price(const Vec& y, const std::vector<double>& cost, std::vector<double>& d) const {
    std::span<const double> ys(y.data(), static_cast<std::size_t>(m_));
    std::span<double> ds(d.data(), static_cast<std::size_t>(n_));
    if (cfg_.threads > 1) kernels::omp::price_columns(a_, ys, std::span(cost.data(), n_), ds);
    else kernels::serial::price_columns(a_, ys, std::span(cost.data(), n_), ds);
    for (int i = 0; i < m_; ++i) d[n_ + i] = y[i];  // logical column is −e_i with zero cost
  }

  double infeasibility() const {
    double worst = 0.0;
    for (int i = 0; i < m_; ++i) {
      const int j = head_[i];
      worst = std::max({worst, lo_[j] - x_[j], x_[j] - up_[j]});
    }
    return worst;
  }

  double dual_violation(int j, double dj) const {
    switch (status_[j]) {
      case BasisStatus::Basic: return std::abs(dj);
      case BasisStatus::AtLower: return lo_[j] == up_[j] ? 0.0 : std::max(0.0, -dj);
      case BasisStatus::AtUpper: return lo_[j] == up_[j] ? 0.0 : std::max(0.0, dj);
      case BasisStatus::Free: return std::abs(dj);
    }
    return 0.0;
  }

  double dual_infeasibility() {
    Vec y(m_);
    for (int i = 0; i < m_; ++i) y[i] = cost_[head_[i]];
    btran(y);
    std::vector<double> d(ncol_);
    price(y, cost_, d);
    double worst = 0.0;
    for (int j = 0; j < ncol_; ++j) worst = std::max(worst, dual_violation(j, d[j]));
    return worst;
  }

  void set_nonbasic_default(int j) {
    if (std::isfinite(lo_[j])) {
      status_[j] = BasisStatus::AtLower;
      x_[j] = lo_[j];
    } else if (std::isfinite(up_[j])) {
      status_[j] = BasisStatus::AtUpper;
      x_[j] = up_[j];
    } else {
      status_[j] = BasisStatus::Free;
      x_[j] = 0.0;
    }
  }

  void slack_basis() {
    x_.assign(ncol_, 0.0);
    status_.assign(ncol_, BasisStatus::AtLower);
    head_.resize(m_);
    pos_.assign(ncol_, -1);
    for (int j = 0; j < n_; ++j) set_nonbasic_default(j);
    for (int i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      pos_[n_ + i] = i;
      status_[n_ + i] = BasisStatus::Basic;
    }
    factor_ok_ = false;
    refactor();
  }

  bool install_warm_basis() {
    const auto& wb = cfg_.warm_basis;
    if (static_cast<int>(wb.size()) != ncol_) return false;
    if (std::count(wb.begin(), wb.end(), BasisStatus::Basic) != m_) return false;
    x_.assign(ncol_, 0.0);
    status_ = wb;
    head_.clear();
    pos_.assign(ncol_, -1);
    for (int j = 0; j < ncol_; ++j) {
      switch (status_[j]) {
        case BasisStatus::Basic:
          pos_[j] = static_cast<int>(head_.size());
          head_.push_back(j);
          break;
        case BasisStatus::AtLower:
          if (std::isfinite(lo_[j])) x_[j] = lo_[j];
          else set_nonbasic_default(j);
          break;
        case BasisStatus::AtUpper:
          if (std::isfinite(up_[j])) x_[j] = up_[j];
          else set_nonbasic_default(j);
          break;
        case BasisStatus::Free:
          set_nonbasic_default(j);
          break;
      }
    }
    factor_ok_ = false;
    return true;
  }

  // Fall back to the logical basis, keeping former basic structurals at a bound.
  bool recover() {
    ++recoveries_;
    if (recoveries_ > 5) return false;
    for (int i = 0; i < m_; ++i) {
      const int j = head_[i];
      pos_[j] = -1;
      if (j < n_ && std::isfinite(lo_[j]) && std::isfinite(up_[j]) && up_[j] - x_[j] < x_[j] - lo_[j]) {
        status_[j] = BasisStatus::AtUpper;
        x_[j] = up_[j];
      } else {
        set_nonbasic_default(j);
      }
    }
    for (int i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      pos_[n_ + i] = i;
      status_[n_ + i] = BasisStatus::Basic;
    }
    return refactor();
  }

  bool refactor() {
    etas_.clear();
    factor_ok_ = false;
    if (m_ == 0) {
      factor_ok_ = true;
      return true;
    }
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m_) * 4);
    for (int i = 0; i < m_; ++i) {
      const int j = head_[i];
      if (j < n_) {
        for (int p = a_.start[j]; p < a_.start[j + 1]; ++p) trip.emplace_back(a_.index[p], i, a_.value[p]);
      } else {
        trip.emplace_back(j - n_, i, -1.0);
      }
    }
    Eigen::SparseMatrix<double> basis(m_, m_);
    basis.setFromTriplets(trip.begin(), trip.end());
    basis.makeCompressed();
    lu_.analyzePattern(basis);
    lu_.factorize(basis);
    if (lu_.info() != Eigen::Success) return false;
    factor_ok_ = true;
    recompute_basics();
    return true;
  }

  void recompute_basics() {
    Vec rhs = Vec::Zero(m_);
    for (int j = 0; j < ncol_; ++j) {
      if (status_[j] == BasisStatus::Basic || x_[j] == 0.0) continue;
      if (j < n_) {
        for (int p = a_.start[j]; p < a_.start[j + 1]; ++p) rhs[a_.index[p]] -= a_.value[p] * x_[j];
      } else {
        rhs[j - n_] += x_[j];
      }
    }
    ftran(rhs);
    for (int i = 0; i < m_; ++i) x_[head_[i]] = rhs[i];
  }

  struct Eta {
    int row;
    double pivot;
    std::vector<std::pair<int, double>> entries;  // off-pivot alpha entries
  };

  void push_eta(int p, const Vec& alpha) {
    Eta e{p, alpha[p], {}};
    for (int i = 0; i < m_; ++i)
      if (i != p && alpha[i] != 0.0) e.entries.emplace_back(i, alpha[i]);
    etas_.push_back(std::move(e));
  }

  void ftran(Vec& v) {
    if (m_ == 0) return;
    v = lu_.solve(v);
    for (const auto& e : etas_) {
      const double vp = v[e.row] / e.pivot;
      v[e.row] = vp;
      if (vp != 0.0)
        for (auto [i, a] : e.entries) v[i] -= a * vp;
    }
  }

  void btran(Vec& v) {
    if (m_ == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = v[it->row];
      for (auto [i, a] : it->entries) s -= v[i] * a;
      v[it->row] = s / it->pivot;
    }
    v = lu_.transpose().solve(v);
  }

  LPSolution finish(Status status) {
    LPSolution sol;
    sol.status = status;
    sol.iterations = iterations_;
    sol.primal.assign(x_.begin(), x_.begin() + n_);
    // Snap structurals within tolerance of a bound.
    for (int j = 0; j < n_; ++j) {
      if (std::abs(sol.primal[j] - lo_[j]) <= ftol_) sol.primal[j] = lo_[j];
      else if (std::abs(sol.primal[j] - up_[j]) <= ftol_) sol.primal[j] = up_[j];
    }
    sol.basis = status_;
    sol.row_activity.assign(m_, 0.0);
    for (int j = 0; j < n_; ++j)
      for (int p = a_.start[j]; p < a_.start[j + 1]; ++p) sol.row_activity[a_.index[p]] += a_.value[p] * sol.primal[j];
    double pinf = 0.0;
    for (int j = 0; j < n_; ++j) pinf = std::max({pinf, lo_[j] - sol.primal[j], sol.primal[j] - up_[j]});
    for (int i = 0; i < m_; ++i) {
      const double v = std::max(lo_[n_ + i] - sol.row_activity[i], sol.row_activity[i] - up_[n_ + i]);
      pinf = std::max(pinf, v);
      if (status == Status::Infeasible && v > ftol_) sol.infeasible_rows.push_back(i);
    }
    sol.max_primal_infeasibility = pinf;
    sol.objective_value = lp_.evaluate(sol.primal);

    if (factor_ok_ && m_ >= 0) {
      Vec y(m_);
      for (int i = 0; i < m_; ++i) y[i] = cost_[head_[i]];
      btran(y);
      std::vector<double> d(ncol_);
      price(y, cost_, d);
      double dinf = 0.0;
      for (int j = 0; j < ncol_; ++j) dinf = std::max(dinf, dual_violation(j, d[j]));
      sol.max_dual_infeasibility = dinf;
      sol.duals.resize(m_);
      for (int i = 0; i < m_; ++i) sol.duals[i] = sign_ * y[i];
      sol.reduced_costs.resize(n_);
      for (int j = 0; j < n_; ++j) sol.reduced_costs[j] = status_[j] == BasisStatus::Basic ? 0.0 : sign_ * d[j];
    } else {
      sol.duals.assign(m_, 0.0);
      sol.reduced_costs.assign(n_, 0.0);
    }

    if (sol.status == Status::Optimal &&
        (pinf > cfg_.feasibility_tol || sol.max_dual_infeasibility > std::max(1e-7, 100 * dtol_)))
      sol.status = Status::NumericalFailure;
    return sol;
  }

  const LinearProgram& lp_;
  const SolverConfig& cfg_;
  int m_ = 0, n_ = 0, ncol_ = 0;
  double sign_ = 1.0, ftol_ = 1e-9, dtol_ = 1e-9;
  long max_iter_ = 0, iterations_ = 0;
  int recoveries_ = 0;
  kernels::CscMatrix a_;
  std::vector<double> lo_, up_, cost_, x_;
  std::vector<BasisStatus> status_;
  std::vector<int> head_, pos_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  bool factor_ok_ = false;
  std::vector<Eta> etas_;
};

}  // namespace

LPSolution solve(const LinearProgram& lp, const SolverConfig& config) {
  lp.check();
  Simplex simplex(lp, config);
  return simplex.run();
}

}  // namespace mcmot::lp
