#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mcmot::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { LessEqual, Equal, GreaterEqual };
enum class Direction { Minimize, Maximize };

struct Term {
  int var;
  double coef;
};

struct Row {
  std::vector<Term> terms;
  Sense sense = Sense::Equal;
  double rhs = 0.0;
};

/// Sparse LP: optimize objective·x + constant subject to rows and variable bounds.
class LinearProgram {
 public:
  Direction direction = Direction::Minimize;

  int add_var(double lower, double upper, double cost = 0.0, std::string label = {});
  int add_row(std::vector<Term> terms, Sense sense, double rhs, std::string label = {});
  void set_cost(int var, double cost);
  void add_constant(double c) { constant_ += c; }

  int num_vars() const { return static_cast<int>(lower_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  double lower(int j) const { return lower_[j]; }
  double upper(int j) const { return upper_[j]; }
  void set_bounds(int j, double lower, double upper);
  double cost(int j) const { return cost_[j]; }
  const std::vector<double>& costs() const { return cost_; }
  double constant() const { return constant_; }
  const Row& row(int i) const { return rows_[i]; }
  const std::vector<Row>& rows() const { return rows_; }
  const std::string& var_label(int j) const { return var_labels_[j]; }
  const std::string& row_label(int i) const { return row_labels_[i]; }

  /// Objective value of `x` including the constant.
  double evaluate(const std::vector<double>& x) const;

  /// Throws InvalidInput if a term references an unknown variable or a bound pair is inverted.
  void check() const;

 private:
  std::vector<double> lower_, upper_, cost_;
  std::vector<std::string> var_labels_;
  std::vector<Row> rows_;
  std::vector<std::string> row_labels_;
  double constant_ = 0.0;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

const char* status_name(Status s);

/// Basis membership of a structural (index < num_vars) or row logical (num_vars + i).
enum class BasisStatus : std::uint8_t { Basic, AtLower, AtUpper, Free };

struct SolverConfig {
  double feasibility_tol = 1e-8;
  double optimality_tol = 1e-9;
  double relative_gap_tol = 1e-6;
  double pivot_tol = 1e-9;
  long max_iterations = 0;      // 0 = automatic
  int refactor_interval = 64;   // eta updates between LU refactorizations
  int threads = 1;              // >1 enables the OpenMP pricing kernel
  /// Optional warm start; ignored unless sized num_vars + num_rows with a
  /// consistent number of basic entries.
  std::vector<BasisStatus> warm_basis;
};

/// Applies MCMOT_SOLVER_TOL from the environment when set.
SolverConfig config_from_env(SolverConfig base = {});

struct LPSolution {
  Status status = Status::NumericalFailure;
  double objective_value = 0.0;
  std::vector<double> primal;        // one per variable
  std::vector<double> duals;         // d objective / d rhs, one per row
  std::vector<double> reduced_costs; // d objective / d x_j at the current bound
  std::vector<double> row_activity;
  double max_primal_infeasibility = 0.0;
  double max_dual_infeasibility = 0.0;
  long iterations = 0;
  std::vector<BasisStatus> basis;
  /// For Infeasible: rows still violated when phase 1 stalled.
  std::vector<int> infeasible_rows;
};

LPSolution solve(const LinearProgram& lp, const SolverConfig& config = {});

/// |primal objective − (Σ duals·rhs + reduced-cost bound terms + constant)|.
/// Throws InvalidInput unless the solution is optimal.
double duality_gap(const LPSolution& solution, const LinearProgram& lp);

/// Writes the LP in free MPS format (objective row "COST"; maximize via OBJSENSE).
void write_mps(const LinearProgram& lp, std::ostream& out);

}  // namespace mcmot::lp
