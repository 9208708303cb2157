#include "mcmot/payoffs.hpp"

#include <algorithm>
#include <cmath>

#include "mcmot/error.hpp"

namespace mcmot {

PayoffSpec PayoffSpec::basket_asian_call(double strike) {
  require(std::isfinite(strike) && strike >= 0.0, "basket strike must be finite and non-negative");
  PayoffSpec p;
  p.kind = PayoffKind::BasketAsianCall;
  p.strike = strike;
  return p;
}

PayoffSpec PayoffSpec::max_squared_increment() {
  PayoffSpec p;
  p.kind = PayoffKind::MaxSquaredIncrement;
  return p;
}

PayoffSpec PayoffSpec::table(Shape shape, std::vector<double> values) {
  require(element_count(shape) == values.size(), "payoff table size does not match its shape");
  PayoffSpec p;
  p.kind = PayoffKind::Table;
  p.table_shape = std::move(shape);
  p.table_values = std::move(values);
  return p;
}

PayoffSpec PayoffSpec::constant_value(double value) {
  PayoffSpec p;
  p.kind = PayoffKind::Constant;
  p.constant = value;
  return p;
}

const char* payoff_kind_name(PayoffKind kind) {
  switch (kind) {
    case PayoffKind::BasketAsianCall: return "basket_asian_call";
    case PayoffKind::MaxSquaredIncrement: return "max_squared_increment";
    case PayoffKind::Table: return "table";
    case PayoffKind::Constant: return "constant";
  }
  return "unknown";
}

PayoffKind payoff_kind_from_name(const std::string& name) {
  for (auto k : {PayoffKind::BasketAsianCall, PayoffKind::MaxSquaredIncrement, PayoffKind::Table,
                 PayoffKind::Constant})
    if (name == payoff_kind_name(k)) return k;
  fail(ErrorCategory::InvalidInput, "unknown payoff kind '" + name + "'");
}

double evaluate(const PayoffSpec& payoff, std::span<const double> x, std::span<const double> y,
                std::span<const std::size_t> index) {
  switch (payoff.kind) {
    case PayoffKind::BasketAsianCall: {
      require(x.size() == 2 && y.size() == 2, "basket_asian_call needs two maturities");
      return std::max((x[0] + x[1] + y[0] + y[1]) / 4.0 - payoff.strike, 0.0);
    }
    case PayoffKind::MaxSquaredIncrement: {
      require(x.size() == 2 && y.size() == 2, "max_squared_increment needs two maturities");
      return std::max((x[1] - x[0]) * (x[1] - x[0]), (y[1] - y[0]) * (y[1] - y[0]));
    }
    case PayoffKind::Table: {
      require(index.size() == payoff.table_shape.size(), "payoff table rank does not match the path");
      for (std::size_t k = 0; k < index.size(); ++k)
        require(index[k] < payoff.table_shape[k], "path index outside the payoff table");
      return payoff.table_values[flatten(index, payoff.table_shape)];
    }
    case PayoffKind::Constant: return payoff.constant;
  }
  return 0.0;
}

std::vector<double> tabulate(const PayoffSpec& payoff, const MarginalSystem& system) {
  const int n = system.horizon();
  Shape shape;
  for (Asset a : {Asset::X, Asset::Y})
    for (const auto& law : system.of(a)) shape.push_back(law.size());
  if (payoff.kind == PayoffKind::Table) {
    require(payoff.table_shape == shape, "payoff table shape does not match the marginal grid");
    for (double v : payoff.table_values)
      if (!std::isfinite(v)) fail(ErrorCategory::InvalidInput, "payoff table contains a non-finite value");
    return payoff.table_values;
  }
  std::vector<double> out(element_count(shape));
  MultiIndex mi(shape.size(), 0);
  std::vector<double> x(n), y(n);
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (int t = 0; t < n; ++t) {
      x[t] = system.law(Asset::X, t + 1).points()[mi[t]];
      y[t] = system.law(Asset::Y, t + 1).points()[mi[n + t]];
    }
    out[k] = evaluate(payoff, x, y, mi);
    if (!std::isfinite(out[k])) fail(ErrorCategory::Numerical, "payoff evaluated to a non-finite value");
    next_index(mi, shape);
  }
  return out;
}

}  // namespace mcmot
