#pragma once

#include <span>
#include <string>
#include <vector>

#include "mcmot/grid.hpp"
#include "mcmot/marginals.hpp"

namespace mcmot {

enum class PayoffKind { BasketAsianCall, MaxSquaredIncrement, Table, Constant };

struct PayoffSpec {
  PayoffKind kind = PayoffKind::Constant;
  double strike = 0.0;   // basket_asian_call
  double constant = 0.0; // constant
  Shape table_shape;     // table
  std::vector<double> table_values;

  static PayoffSpec basket_asian_call(double strike);
  static PayoffSpec max_squared_increment();
  static PayoffSpec table(Shape shape, std::vector<double> values);
  static PayoffSpec constant_value(double value);
};

const char* payoff_kind_name(PayoffKind kind);
PayoffKind payoff_kind_from_name(const std::string& name);

/// Value on one path. `index` is the full-grid multi-index, only read by the table kind.
double evaluate(const PayoffSpec& payoff, std::span<const double> x, std::span<const double> y,
                std::span<const std::size_t> index = {});

/// Values over the full product grid, row-major in (X_1..X_N, Y_1..Y_N).
std::vector<double> tabulate(const PayoffSpec& payoff, const MarginalSystem& system);

}  // namespace mcmot
