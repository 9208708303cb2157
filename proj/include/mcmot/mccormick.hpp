#pragma once

#include <map>
#include <vector>

#include "mcmot/coupling.hpp"
#include "mcmot/lp.hpp"
#include "mcmot/mot.hpp"

namespace mcmot {

struct BoundTable {
  Shape shape;
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Lower/upper mass tables per projection family.
struct CapacityBounds {
  int horizon = 0;
  std::map<ProjectionKey, BoundTable> tables;

  const BoundTable& at(const ProjectionKey& key) const;
  BoundTable& at(const ProjectionKey& key);
  /// Throws InvalidInput unless every family is present with the grid's shape and 0 ≤ L ≤ U ≤ 1.
  void validate(const ProductGrid& grid) const;
};

/// The families of the envelope system, in program order: for each own asset
/// and t in 1..N−1 the (full, other_t), prefix(t) and (prefix(t), other_t)
/// tables, then the full-path table.
std::vector<ProjectionKey> mccormick_families(int horizon);

CapacityBounds default_bounds(const MarginalSystem& system);

struct McCormickInstance {
  MarginalSystem system;
  PayoffSpec payoff;
  CapacityBounds bounds;
  lp::Direction direction = lp::Direction::Minimize;
};

/// Envelope block for one own asset and one t: a point set over the
/// (a_{1:N}, b_t) grid with one w column and eight rows per point.
struct EnvelopeBlock {
  Asset own = Asset::X;
  int t = 1;
  std::size_t points = 0;
  ProjectionKey key_a, key_b, key_c, key_d;  // a·b and c·d
  std::vector<std::size_t> ib, ic, id;       // point -> entry of b, c, d tables
  int w_first = 0;
  int row_first = 0;  // rows [row_first + 8p, row_first + 8p + 8)
};

struct McCormickProgram {
  lp::LinearProgram lp;
  MotLayout layout;
  std::map<ProjectionKey, int> aux_first;  // first column of each family's table
  std::vector<EnvelopeBlock> envelopes;
};

McCormickProgram build_mccormick_program(const MarginalSystem& system, std::span<const double> payoff,
                                         const CapacityBounds& bounds, lp::Direction direction);

lp::LinearProgram build_mccormick_lp(const McCormickInstance& instance);

BoundResult solve_mccormick(const McCormickInstance& instance,
                            const lp::SolverConfig& config = lp::config_from_env());

/// Envelope looseness at one point of the (a_{1:N}, b_t) grid: the wider of the
/// two McCormick intervals (concave minus convex envelope) around a·b and c·d.
/// Zero when every factor sits at a box corner.
double envelope_gap(const CouplingTensor& coupling, const CapacityBounds& bounds, Asset own, int t,
                    std::size_t point);

/// Same from already-projected factor values and their boxes.
double envelope_gap(double a, double la, double ua, double b, double lb, double ub, double c, double lc, double uc,
                    double d, double ld, double ud);

}  // namespace mcmot
