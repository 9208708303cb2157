#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace mcmot {

struct RatioRecord {
  std::string label;
  double mot_min = 0.0, mot_max = 0.0;
  double mc_min = 0.0, mc_max = 0.0;
  double ratio = 1.0;
  bool degenerate = false;  // MOT interval narrower than 1e-9; ratio set to 1
};

/// (mc_max − mc_min)/(mot_max − mot_min), or 1 when the MOT gap is ≤ 1e-9.
/// Throws Consistency if the McCormick interval leaves the MOT one by more than 1e-6.
double compute_ratio(std::pair<double, double> mot, std::pair<double, double> mc);

RatioRecord make_ratio_record(std::string label, std::pair<double, double> mot, std::pair<double, double> mc);

void write_ratio_csv(const std::vector<RatioRecord>& records, std::ostream& out);

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<long> counts;
};

/// Equal-width bins over [lo, hi] (the data range when lo ≥ hi). Identical
/// values all land in the first bin.
Histogram histogram(const std::vector<double>& values, int bins, double lo = 0.0, double hi = 0.0);

void write_histogram_csv(const Histogram& h, std::ostream& out);
void write_histogram_svg(const Histogram& h, const std::string& title, std::ostream& out);

/// Histogram of the ratios, written as `<stem>.csv` and `<stem>.svg`.
Histogram emit_histogram(const std::vector<RatioRecord>& records, int bins, const std::string& stem);

}  // namespace mcmot
