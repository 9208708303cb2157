#include "mcmot/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "mcmot/error.hpp"

namespace mcmot {

void MarketSlice::validate() const {
  require(std::isfinite(forward) && forward > 0.0, "forward must be positive");
  require(std::isfinite(discount) && discount > 0.0 && discount <= 1.0, "discount must lie in (0,1]");
  require(!quotes.empty() || !extra_points.empty(), "slice " + std::to_string(maturity_index) + " is empty");
  for (std::size_t i = 0; i < quotes.size(); ++i) {
    const auto& q = quotes[i];
    const std::string where = "quote " + std::to_string(i) + " of maturity " + std::to_string(maturity_index);
    require(q.maturity_index == maturity_index, where + ": maturity index mismatch");
    require(std::isfinite(q.strike) && q.strike > 0.0, where + ": strike must be positive");
    require(std::isfinite(q.bid) && std::isfinite(q.ask) && q.bid >= 0.0 && q.bid <= q.ask,
            where + ": need 0 <= bid <= ask");
    if (i > 0) require(quotes[i - 1].strike < q.strike, where + ": strikes must be strictly increasing");
  }
  for (double p : extra_points) require(std::isfinite(p) && p >= 0.0, "extra support points must be >= 0");
}

namespace {

// Scaled inputs are snapped to a 2^-40 grid so that rescaled chains give the
// bitwise-same LP instead of differing in the last ulp.
double snap(double v) { return std::ldexp(std::nearbyint(std::ldexp(v, 40)), -40); }

}  // namespace

ScaledQuotes scale_quotes(const MarketSlice& slice) {
  require(slice.forward > 0.0 && slice.discount > 0.0, "forward and discount must be positive");
  ScaledQuotes s;
  const double df = slice.discount * slice.forward;
  for (const auto& q : slice.quotes) {
    s.ask.push_back(snap(q.ask / df));
    s.bid.push_back(snap(q.bid / df));
    s.strike.push_back(snap(q.strike / slice.forward));
  }
  return s;
}

std::vector<double> scaled_support(const MarketSlice& slice) {
  std::vector<double> pts;
  for (const auto& q : slice.quotes) pts.push_back(snap(q.strike / slice.forward));
  for (double p : slice.extra_points) pts.push_back(snap(p / slice.forward));
  std::sort(pts.begin(), pts.end());
  require(std::adjacent_find(pts.begin(), pts.end()) == pts.end(),
          "extra support point coincides with a strike at maturity " + std::to_string(slice.maturity_index));
  return pts;
}

CalibrationProgram build_calibration_program(const std::vector<MarketSlice>& slices) {
  require(!slices.empty(), "no market slices");
  const int n = static_cast<int>(slices.size());
  CalibrationProgram prog;
  auto& L = prog.layout;
  auto& lp = prog.lp;
  for (int t = 0; t < n; ++t) {
    require(slices[t].maturity_index == t + 1, "slices must be ordered by maturity starting at 1");
    slices[t].validate();
    L.support.push_back(scaled_support(slices[t]));
    L.shape.push_back(L.support.back().size());
  }
  const std::size_t total = element_count(L.shape);
  require(total <= 2'000'000, "calibration grid too large");
  L.num_mu = static_cast<int>(total);

  MultiIndex idx;
  for (std::size_t f = 0; f < total; ++f) {
    unflatten(f, L.shape, idx);
    std::string lab = "mu[";
    for (int t = 0; t < n; ++t) lab += (t ? "," : "") + std::to_string(idx[t]);
    lp.add_var(0.0, 1.0, 0.0, lab + "]");
  }

  // Marginal row terms per (t, point).
  std::vector<std::vector<std::vector<lp::Term>>> marg(n);
  for (int t = 0; t < n; ++t) marg[t].resize(L.shape[t]);
  for (std::size_t f = 0; f < total; ++f) {
    unflatten(f, L.shape, idx);
    for (int t = 0; t < n; ++t) marg[t][idx[t]].push_back({static_cast<int>(f), 1.0});
  }

  L.price_var.resize(n);
  L.ask.resize(n);
  L.bid.resize(n);
  for (int t = 0; t < n; ++t) {
    const auto sq = scale_quotes(slices[t]);
    L.ask[t] = sq.ask;
    L.bid[t] = sq.bid;
    const std::string tag = std::to_string(t + 1);
    for (std::size_t i = 0; i < sq.strike.size(); ++i) {
      const std::string q = tag + "[" + std::to_string(i) + "]";
      const int c = lp.add_var(-lp::kInf, lp::kInf, 0.0, "c_t" + q);
      L.price_var[t].push_back(c);
      const int pp = lp.add_var(0.0, lp::kInf, 1.0, "pp_t" + q);
      const int pm = lp.add_var(0.0, lp::kInf, 1.0, "pm_t" + q);
      const int qp = lp.add_var(0.0, lp::kInf, 1.0, "qp_t" + q);
      const int qm = lp.add_var(0.0, lp::kInf, 1.0, "qm_t" + q);
      lp.add_row({{c, 1.0}, {pp, -1.0}, {pm, 1.0}}, lp::Sense::Equal, sq.ask[i], "split_ask_t" + q);
      lp.add_row({{c, 1.0}, {qp, -1.0}, {qm, 1.0}}, lp::Sense::Equal, sq.bid[i], "split_bid_t" + q);

      std::vector<lp::Term> terms{{c, -1.0}};
      for (std::size_t j = 0; j < L.shape[t]; ++j) {
        const double payoff = std::max(L.support[t][j] - sq.strike[i], 0.0);
        if (payoff == 0.0) continue;
        for (auto term : marg[t][j]) terms.push_back({term.var, payoff});
      }
      lp.add_row(std::move(terms), lp::Sense::Equal, 0.0, "price_t" + q);
    }
  }

  // Martingale rows per prefix path s_{1:t}: Σ μ·(s_{t+1} − s_t) = 0.
  auto strides = row_major_strides(L.shape);
  for (int t = 0; t + 1 < n; ++t) {
    std::map<std::size_t, std::vector<lp::Term>> rows;
    for (std::size_t f = 0; f < total; ++f) {
      unflatten(f, L.shape, idx);
      const double incr = L.support[t + 1][idx[t + 1]] - L.support[t][idx[t]];
      if (incr == 0.0) continue;
      std::size_t prefix = 0;
      for (int k = 0; k <= t; ++k) prefix += idx[k] * strides[k];
      rows[prefix].push_back({static_cast<int>(f), incr});
    }
    for (auto& [prefix, terms] : rows)
      lp.add_row(std::move(terms), lp::Sense::Equal, 0.0,
                 "mart_t" + std::to_string(t + 1) + "[" + std::to_string(prefix) + "]");
  }

  for (int t = 0; t < n; ++t) {
    std::vector<lp::Term> terms;
    for (std::size_t j = 0; j < L.shape[t]; ++j)
      if (L.support[t][j] != 0.0)
        for (auto term : marg[t][j]) terms.push_back({term.var, L.support[t][j]});
    lp.add_row(std::move(terms), lp::Sense::Equal, 1.0, "mean_t" + std::to_string(t + 1));
  }

  std::vector<lp::Term> all;
  for (std::size_t f = 0; f < total; ++f) all.push_back({static_cast<int>(f), 1.0});
  lp.add_row(std::move(all), lp::Sense::Equal, 1.0, "mass");
  return prog;
}

lp::LinearProgram build_calibration_lp(const std::vector<MarketSlice>& slices) {
  return build_calibration_program(slices).lp;
}

namespace {

std::string family_of(const std::string& label) {
  auto cut = label.find_first_of("_[");
  std::string fam = label.substr(0, cut);
  if (fam == "split") {
    auto second = label.find('_', cut + 1);
    fam = label.substr(0, second);
  }
  return fam;
}

}  // namespace

CalibrationResult calibrate(const std::vector<MarketSlice>& slices, const lp::SolverConfig& config,
                            const std::string& asset_id) {
  auto prog = build_calibration_program(slices);
  const auto& L = prog.layout;
  auto sol = lp::solve(prog.lp, config);
  if (sol.status == lp::Status::Infeasible) {
    std::set<std::string> fams;
    std::string detail;
    for (int r : sol.infeasible_rows) {
      fams.insert(family_of(prog.lp.row_label(r)));
      if (detail.size() < 200) detail += " " + prog.lp.row_label(r);
    }
    std::string msg = "calibration LP infeasible at phase 1; failing families:";
    for (const auto& f : fams) msg += " " + f;
    fail(ErrorCategory::Infeasible, msg + " (rows:" + detail + ")");
  }
  if (sol.status != lp::Status::Optimal)
    fail(ErrorCategory::Numerical, std::string("calibration LP ended with status ") + lp::status_name(sol.status));

  CalibrationResult res;
  res.shape = L.shape;
  res.iterations = sol.iterations;
  res.joint.assign(sol.primal.begin(), sol.primal.begin() + L.num_mu);
  double total = 0.0;
  for (double& v : res.joint) {
    if (v < 0.0) {
      if (v < -1e-7) fail(ErrorCategory::Numerical, "negative calibrated mass");
      v = 0.0;
    }
    total += v;
  }
  for (double& v : res.joint) v /= total;

  const int n = static_cast<int>(L.shape.size());
  std::vector<std::vector<double>> marg(n);
  for (int t = 0; t < n; ++t) marg[t].assign(L.shape[t], 0.0);
  MultiIndex idx;
  for (std::size_t f = 0; f < res.joint.size(); ++f) {
    unflatten(f, L.shape, idx);
    for (int t = 0; t < n; ++t) marg[t][idx[t]] += res.joint[f];
  }
  for (int t = 0; t < n; ++t) res.marginals.emplace_back(L.support[t], marg[t], asset_id, t + 1);

  res.fitted_scaled_prices.resize(n);
  res.objective = 0.0;
  for (int t = 0; t < n; ++t)
    for (std::size_t i = 0; i < L.price_var[t].size(); ++i) {
      const double c = sol.primal[L.price_var[t][i]];
      res.fitted_scaled_prices[t].push_back(c);
      res.objective += std::abs(c - L.ask[t][i]) + std::abs(c - L.bid[t][i]);
      res.spread_floor += std::abs(L.ask[t][i] - L.bid[t][i]);
    }
  res.all_quotes_feasible = res.objective <= res.spread_floor + 1e-7;
  return res;
}

FeasibilityDiagnosis feasibility_diagnosis(const CalibrationResult& result, const std::vector<MarketSlice>& slices) {
  require(result.fitted_scaled_prices.size() == slices.size(), "result does not match the slices");
  FeasibilityDiagnosis d;
  for (std::size_t t = 0; t < slices.size(); ++t) {
    const auto sq = scale_quotes(slices[t]);
    require(result.fitted_scaled_prices[t].size() == sq.ask.size(), "result does not match the slices");
    for (std::size_t i = 0; i < sq.ask.size(); ++i) {
      QuoteDiagnosis q;
      q.maturity_index = slices[t].maturity_index;
      q.strike = slices[t].quotes[i].strike;
      q.fitted = result.fitted_scaled_prices[t][i];
      q.distance = std::max({sq.bid[i] - q.fitted, q.fitted - sq.ask[i], 0.0});
      q.excess = std::abs(q.fitted - sq.ask[i]) + std::abs(q.fitted - sq.bid[i]) - (sq.ask[i] - sq.bid[i]);
      q.outside = q.distance > 1e-7;
      d.quotes.push_back(q);
    }
  }
  d.excess = result.objective - result.spread_floor;
  return d;
}

std::vector<MarginalLaw> price_marginals(const CalibrationResult& result, double level) {
  require(level > 0.0, "price level must be positive");
  std::vector<MarginalLaw> out;
  for (const auto& m : result.marginals) {
    std::vector<double> pts = m.points();
    for (double& p : pts) p *= level;
    out.emplace_back(SupportGrid(m.grid().asset_id(), m.grid().maturity_index(), pts), m.masses());
  }
  return out;
}

double calibration_martingale_residual(const CalibrationResult& result) {
  const std::size_t n = result.shape.size();
  auto strides = row_major_strides(result.shape);
  double worst = 0.0;
  MultiIndex idx;
  for (std::size_t t = 0; t + 1 < n; ++t) {
    std::map<std::size_t, double> acc;
    for (std::size_t f = 0; f < result.joint.size(); ++f) {
      unflatten(f, result.shape, idx);
      std::size_t prefix = 0;
      for (std::size_t k = 0; k <= t; ++k) prefix += idx[k] * strides[k];
      acc[prefix] += result.joint[f] * (result.marginals[t + 1].points()[idx[t + 1]] -
                                        result.marginals[t].points()[idx[t]]);
    }
    for (auto& [k, v] : acc) worst = std::max(worst, std::abs(v));
  }
  return worst;
}

}  // namespace mcmot
