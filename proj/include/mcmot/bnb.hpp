#pragma once

#include <optional>
#include <utility>

#include "mcmot/mccormick.hpp"

namespace mcmot {

struct BnBConfig {
  double gap_tolerance = 1e-3;
  double residual_tolerance = 1e-8;
  long node_budget = 10000;
  double time_budget_seconds = 300.0;
  /// >1 solves the children of a batch of nodes concurrently; results are
  /// only guaranteed reproducible with a single worker.
  int workers = 1;
  int repair_every = 5;
  int repair_iterations = 20;
  lp::SolverConfig lp = lp::config_from_env();
};

enum class Termination { GapClosed, NodeBudget, TimeBudget };
const char* termination_name(Termination t);

struct BnBNode {
  int id = 0;
  int depth = 0;
  CapacityBounds box;
  double relaxation_value = 0.0;
  lp::LPSolution solution;
};

struct BnBReport {
  lp::Direction direction = lp::Direction::Minimize;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  std::optional<CouplingTensor> incumbent;
  double incumbent_value = 0.0;
  double root_relaxation = 0.0;
  long nodes_explored = 0;
  long nodes_open = 0;
  int incumbent_updates = 0;
  double max_residual_of_incumbent = 0.0;
  double incumbent_martingale_residual = 0.0;
  Termination terminated = Termination::GapClosed;
  double seconds = 0.0;
};

/// Entry chosen for a spatial split.
struct BranchChoice {
  ProjectionKey key;
  std::size_t entry = 0;
  double split = 0.0;
  double score = 0.0;
};

/// Scores every bilinear factor at points whose products disagree by more
/// than `tol`; nullopt when no point does or no violated factor is wide enough.
std::optional<BranchChoice> select_branch(const McCormickProgram& program, const lp::LPSolution& solution,
                                          const CapacityBounds& box, double tol);

/// Children partitioning `node.box` at the selected entry (ids and solutions left empty).
std::optional<std::pair<BnBNode, BnBNode>> branch(const BnBNode& node, const McCormickProgram& program, double tol);

struct RepairConfig {
  double residual_tolerance = 1e-8;
  int max_iterations = 20;
  double improvement_tolerance = 1e-9;
  lp::SolverConfig lp = lp::config_from_env();
};

struct RepairResult {
  CouplingTensor coupling;
  double value = 0.0;
  int iterations = 0;
};

/// Alternating polish: fix the full-path laws and solve for π, then fix the
/// prefix projections and solve again, until no further improvement. Returns
/// nullopt if the result is not bicausal within tolerance or violates the
/// instance's capacity bounds.
std::optional<RepairResult> polish_bicausal(const CouplingTensor& start, const McCormickInstance& instance,
                                            const RepairConfig& config = {});

/// Returns the input unchanged when it is already bicausal, else polishes it.
std::optional<RepairResult> repair_incumbent(const CouplingTensor& coupling, const McCormickInstance& instance,
                                             const RepairConfig& config = {});

BnBReport solve_bicausal(const McCormickInstance& instance, const BnBConfig& config = {});

}  // namespace mcmot
