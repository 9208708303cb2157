#include "mcmot/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mcmot/error.hpp"

namespace mcmot::synthetic {

std::vector<MarginalLaw> random_two_period(std::mt19937_64& rng, double level, int min_points, int max_points,
                                           const std::string& asset_id) {
  std::uniform_int_distribution<int> count(min_points, max_points);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int m2 = count(rng), m1 = count(rng);

  // Later support on a coarse lattice so points stay well separated.
  std::set<int> ticks;
  while (static_cast<int>(ticks.size()) < m2) ticks.insert(static_cast<int>(unit(rng) * 20.0));
  std::vector<double> later(ticks.size());
  std::transform(ticks.begin(), ticks.end(), later.begin(),
                 [&](int k) { return level * (0.5 + 0.05 * k); });

  const double lo = later.front(), hi = later.back();
  std::set<double> early_set;
  while (static_cast<int>(early_set.size()) < m1) {
    double x = lo + (hi - lo) * (0.05 + 0.9 * unit(rng));
    early_set.insert(std::round(x * 1000.0) / 1000.0);
  }
  std::vector<double> earlier(early_set.begin(), early_set.end());

  std::vector<double> w1(earlier.size());
  double total = 0.0;
  for (double& w : w1) total += (w = 0.2 + unit(rng));
  for (double& w : w1) w /= total;

  std::vector<double> w2(later.size(), 0.0);
  for (std::size_t i = 0; i < earlier.size(); ++i) {
    const double x = earlier[i];
    std::vector<std::size_t> below, above;
    for (std::size_t k = 0; k < later.size(); ++k) (later[k] < x ? below : above).push_back(k);
    if (later[above.front()] == x) {
      w2[above.front()] += w1[i];
      continue;
    }
    const std::size_t a = below[std::min(below.size() - 1, static_cast<std::size_t>(unit(rng) * below.size()))];
    const std::size_t b = above[std::min(above.size() - 1, static_cast<std::size_t>(unit(rng) * above.size()))];
    const double pa = (later[b] - x) / (later[b] - later[a]);
    w2[a] += w1[i] * pa;
    w2[b] += w1[i] * (1.0 - pa);
  }
  // Drop representation error so the masses sum to 1 and the means match.
  double s2 = 0.0;
  for (double v : w2) s2 += v;
  for (double& v : w2) v /= s2;
  return {MarginalLaw(earlier, w1, asset_id, 1), MarginalLaw(later, w2, asset_id, 2)};
}

MarginalSystem random_system(std::mt19937_64& rng, const SystemShape& shape) {
  auto x = random_two_period(rng, shape.x_level, shape.min_points, shape.max_points, "X");
  auto y = random_two_period(rng, shape.y_level, shape.min_points, shape.max_points, "Y");
  return MarginalSystem(std::move(x), std::move(y));
}

MarginalSystem worked_example() {
  return MarginalSystem({MarginalLaw({9, 10, 11}, {0.2, 0.6, 0.2}, "X", 1),
                         MarginalLaw({0, 10, 20}, {0.1, 0.8, 0.1}, "X", 2)},
                        {MarginalLaw({16, 20, 24}, {0.3, 0.4, 0.3}, "Y", 1),
                         MarginalLaw({14, 20, 26}, {0.2, 0.6, 0.2}, "Y", 2)});
}

}  // namespace mcmot::synthetic

namespace mcmot::synthetic {

namespace {

std::vector<double> distinct_sorted(std::mt19937_64& rng, int count, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::set<double> s;
  while (static_cast<int>(s.size()) < count) s.insert(std::round(u(rng) * 1000.0) / 1000.0);
  return {s.begin(), s.end()};
}

bool try_chain(std::mt19937_64& rng, const ChainShape& shape, SyntheticChain& out) {
  std::uniform_int_distribution<int> count(shape.min_strikes, shape.max_strikes);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = shape.maturities;

  // First maturity: strikes plus a top point, rescaled to unit mean.
  auto pts = distinct_sorted(rng, count(rng) + 1, 0.7, 1.3);
  std::vector<double> w(pts.size());
  double total = 0.0, m = 0.0;
  for (double& v : w) total += (v = 0.2 + unit(rng));
  for (std::size_t i = 0; i < w.size(); ++i) m += pts[i] * (w[i] /= total);
  for (double& p : pts) p /= m;

  out.scaled_support = {pts};
  out.shape = {pts.size()};
  out.joint = w;
  std::vector<std::vector<double>> marg{w};
  for (int t = 1; t < n; ++t) {
    const auto& prev = out.scaled_support.back();
    const double lo = prev.front() * (0.8 + 0.1 * unit(rng));
    const double top = prev.back() * (1.1 + 0.1 * unit(rng));
    auto inner = distinct_sorted(rng, count(rng) - 1, lo + 1e-3, prev.back());
    std::vector<double> next{lo};
    next.insert(next.end(), inner.begin(), inner.end());
    next.push_back(top);
    next.erase(std::unique(next.begin(), next.end()), next.end());

    // Kernel rows: each earlier point split between a random bracketing pair.
    std::vector<std::vector<double>> kernel(prev.size(), std::vector<double>(next.size(), 0.0));
    for (std::size_t i = 0; i < prev.size(); ++i) {
      const double x = prev[i];
      std::vector<std::size_t> below, above;
      for (std::size_t k = 0; k < next.size(); ++k) {
        if (next[k] < x) below.push_back(k);
        if (next[k] > x) above.push_back(k);
      }
      const std::size_t a = below[static_cast<std::size_t>(unit(rng) * below.size()) % below.size()];
      const std::size_t b = i + 1 == prev.size() ? next.size() - 1
                                                 : above[static_cast<std::size_t>(unit(rng) * above.size()) % above.size()];
      const double pa = (next[b] - x) / (next[b] - next[a]);
      kernel[i][a] = pa;
      kernel[i][b] = 1.0 - pa;
    }
    std::vector<double> joint(out.joint.size() * next.size());
    for (std::size_t f = 0; f < out.joint.size(); ++f)
      for (std::size_t k = 0; k < next.size(); ++k)
        joint[f * next.size() + k] = out.joint[f] * kernel[f % prev.size()][k];
    std::vector<double> nm(next.size(), 0.0);
    for (std::size_t f = 0; f < joint.size(); ++f) nm[f % next.size()] += joint[f];
    out.joint = std::move(joint);
    out.scaled_support.push_back(next);
    out.shape.push_back(next.size());
    marg.push_back(nm);
  }

  out.slices.clear();
  for (int t = 0; t < n; ++t) {
    MarketSlice s;
    s.maturity_index = t + 1;
    s.discount = std::exp(-shape.rate * 0.5 * (t + 1));
    s.forward = shape.spot / s.discount;
    const auto& sup = out.scaled_support[t];
    for (std::size_t i = 0; i + 1 < sup.size(); ++i) {
      double c = 0.0;
      for (std::size_t j = 0; j < sup.size(); ++j) c += std::max(sup[j] - sup[i], 0.0) * marg[t][j];
      if (c < shape.spread + 1e-4) return false;
      const double df = s.discount * s.forward;
      s.quotes.push_back({t + 1, sup[i] * s.forward, (c - shape.spread) * df, (c + shape.spread) * df});
    }
    s.extra_points = {sup.back() * s.forward};
    out.slices.push_back(std::move(s));
  }
  return true;
}

}  // namespace

SyntheticChain random_chain(std::mt19937_64& rng, const ChainShape& shape) {
  require(shape.maturities >= 1 && shape.min_strikes >= 1 && shape.min_strikes <= shape.max_strikes,
          "bad chain shape");
  SyntheticChain chain;
  for (int attempt = 0; attempt < 10000; ++attempt)
    if (try_chain(rng, shape, chain)) return chain;
  fail(ErrorCategory::InvalidInput, "spread too wide for a synthetic chain");
}

}  // namespace mcmot::synthetic
