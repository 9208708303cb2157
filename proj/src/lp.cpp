#include "mcmot/lp.hpp"

#include <cmath>
#include <cstdlib>
#include <ostream>
#include <sstream>

#include "mcmot/error.hpp"

namespace mcmot::lp {

int LinearProgram::add_var(double lower, double upper, double cost, std::string label) {
  lower_.push_back(lower);
  upper_.push_back(upper);
  cost_.push_back(cost);
  var_labels_.push_back(std::move(label));
  return num_vars() - 1;
}

int LinearProgram::add_row(std::vector<Term> terms, Sense sense, double rhs, std::string label) {
  rows_.push_back(Row{std::move(terms), sense, rhs});
  row_labels_.push_back(std::move(label));
  return num_rows() - 1;
}

void LinearProgram::set_cost(int var, double cost) { cost_.at(var) = cost; }

void LinearProgram::set_bounds(int j, double lower, double upper) {
  lower_.at(j) = lower;
  upper_.at(j) = upper;
}

double LinearProgram::evaluate(const std::vector<double>& x) const {
  double v = constant_;
  for (int j = 0; j < num_vars(); ++j) v += cost_[j] * x[j];
  return v;
}

void LinearProgram::check() const {
  for (int j = 0; j < num_vars(); ++j) {
    require(!std::isnan(lower_[j]) && !std::isnan(upper_[j]) && lower_[j] <= upper_[j],
            "variable " + std::to_string(j) + " has inverted or NaN bounds");
    require(std::isfinite(cost_[j]), "objective coefficient must be finite");
  }
  for (int i = 0; i < num_rows(); ++i) {
    require(std::isfinite(rows_[i].rhs), "row " + std::to_string(i) + " has non-finite rhs");
    for (const auto& t : rows_[i].terms) {
      require(t.var >= 0 && t.var < num_vars(),
              "row " + std::to_string(i) + " references unknown variable " + std::to_string(t.var));
      require(std::isfinite(t.coef), "row coefficient must be finite");
    }
  }
}

const char* status_name(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration-limit";
    case Status::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

SolverConfig config_from_env(SolverConfig base) {
  if (const char* env = std::getenv("MCMOT_SOLVER_TOL")) {
    char* end = nullptr;
    double tol = std::strtod(env, &end);
    require(end != env && std::isfinite(tol) && tol > 0.0, "MCMOT_SOLVER_TOL must be a positive number");
    base.feasibility_tol = tol;
  }
  return base;
}

double duality_gap(const LPSolution& solution, const LinearProgram& lp) {
  require(solution.status == Status::Optimal, "duality gap needs an optimal solution");
  double dual_obj = lp.constant();
  for (int i = 0; i < lp.num_rows(); ++i) dual_obj += solution.duals[i] * lp.row(i).rhs;
  for (int j = 0; j < lp.num_vars(); ++j) dual_obj += solution.reduced_costs[j] * solution.primal[j];
  return std::abs(solution.objective_value - dual_obj);
}

namespace {

std::string mps_name(const std::string& label, char prefix, int index) {
  std::string name = label.empty() ? std::string(1, prefix) + std::to_string(index) : label;
  for (char& ch : name)
    if (ch == ' ' || ch == '\t') ch = '_';
  // Labels are not guaranteed unique; the index suffix keeps MPS names distinct.
  if (!label.empty()) name += "#" + std::to_string(index);
  return name;
}

}  // namespace

void write_mps(const LinearProgram& lp, std::ostream& out) {
  out.precision(17);
  out << "NAME mcmot\n";
  if (lp.direction == Direction::Maximize) out << "OBJSENSE\n    MAX\n";
  out << "ROWS\n N COST\n";
  std::vector<std::string> rnames(lp.num_rows());
  for (int i = 0; i < lp.num_rows(); ++i) {
    rnames[i] = mps_name(lp.row_label(i), 'R', i);
    const char* s = lp.row(i).sense == Sense::LessEqual ? "L" : lp.row(i).sense == Sense::Equal ? "E" : "G";
    out << ' ' << s << ' ' << rnames[i] << '\n';
  }
  // Column-major view of the rows.
  std::vector<std::vector<std::pair<int, double>>> cols(lp.num_vars());
  for (int i = 0; i < lp.num_rows(); ++i)
    for (const auto& t : lp.row(i).terms) cols[t.var].push_back({i, t.coef});
  out << "COLUMNS\n";
  std::vector<std::string> cnames(lp.num_vars());
  for (int j = 0; j < lp.num_vars(); ++j) {
    cnames[j] = mps_name(lp.var_label(j), 'C', j);
    if (lp.cost(j) != 0.0) out << "    " << cnames[j] << " COST " << lp.cost(j) << '\n';
    for (auto [i, v] : cols[j]) out << "    " << cnames[j] << ' ' << rnames[i] << ' ' << v << '\n';
  }
  out << "RHS\n";
  if (lp.constant() != 0.0) out << "    RHS COST " << -lp.constant() << '\n';
  for (int i = 0; i < lp.num_rows(); ++i)
    if (lp.row(i).rhs != 0.0) out << "    RHS " << rnames[i] << ' ' << lp.row(i).rhs << '\n';
  out << "BOUNDS\n";
  for (int j = 0; j < lp.num_vars(); ++j) {
    double lo = lp.lower(j), up = lp.upper(j);
    if (lo == up) {
      out << " FX BND " << cnames[j] << ' ' << lo << '\n';
      continue;
    }
    if (std::isinf(lo) && std::isinf(up)) {
      out << " FR BND " << cnames[j] << '\n';
      continue;
    }
    if (std::isinf(lo)) out << " MI BND " << cnames[j] << '\n';
    else if (lo != 0.0) out << " LO BND " << cnames[j] << ' ' << lo << '\n';
    if (!std::isinf(up)) out << " UP BND " << cnames[j] << ' ' << up << '\n';
  }
  out << "ENDATA\n";
}

}  // namespace mcmot::lp
