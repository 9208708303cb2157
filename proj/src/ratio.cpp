#include "mcmot/ratio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mcmot/error.hpp"

namespace mcmot {

double compute_ratio(std::pair<double, double> mot, std::pair<double, double> mc) {
  auto [lo, hi] = mot;
  auto [mlo, mhi] = mc;
  require(std::isfinite(lo) && std::isfinite(hi) && std::isfinite(mlo) && std::isfinite(mhi),
          "ratio inputs must be finite");
  if (hi < lo - 1e-9) fail(ErrorCategory::Consistency, "MOT interval is inverted");
  if (mlo < lo - 1e-6 || mhi > hi + 1e-6 || mhi < mlo - 1e-6) {
    std::ostringstream msg;
    msg << std::setprecision(10) << "sandwich violated: McCormick [" << mlo << ", " << mhi << "] vs MOT [" << lo
        << ", " << hi << "]";
    fail(ErrorCategory::Consistency, msg.str());
  }
  const double den = hi - lo;
  if (den <= 1e-9) return 1.0;
  return std::max(0.0, mhi - mlo) / den;
}

RatioRecord make_ratio_record(std::string label, std::pair<double, double> mot, std::pair<double, double> mc) {
  RatioRecord r;
  r.label = std::move(label);
  std::tie(r.mot_min, r.mot_max) = mot;
  std::tie(r.mc_min, r.mc_max) = mc;
  r.ratio = compute_ratio(mot, mc);
  r.degenerate = mot.second - mot.first <= 1e-9;
  return r;
}

void write_ratio_csv(const std::vector<RatioRecord>& records, std::ostream& out) {
  out << "label,mot_min,mot_max,mc_min,mc_max,ratio,degenerate\n" << std::setprecision(12);
  for (const auto& r : records)
    out << r.label << ',' << r.mot_min << ',' << r.mot_max << ',' << r.mc_min << ',' << r.mc_max << ','
        << r.ratio << ',' << (r.degenerate ? 1 : 0) << '\n';
}

Histogram histogram(const std::vector<double>& values, int bins, double lo, double hi) {
  require(bins >= 1, "need at least one bin");
  require(!values.empty(), "histogram of no values");
  if (lo >= hi) {
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
  }
  Histogram h;
  h.counts.assign(bins, 0);
  const double width = hi > lo ? (hi - lo) / bins : 0.0;
  for (int k = 0; k <= bins; ++k) h.edges.push_back(width > 0 ? lo + k * width : lo);
  if (width > 0) h.edges.back() = hi;
  for (double v : values) {
    int k = width > 0 ? static_cast<int>(std::floor((v - lo) / width)) : 0;
    h.counts[std::clamp(k, 0, bins - 1)]++;
  }
  return h;
}

void write_histogram_csv(const Histogram& h, std::ostream& out) {
  out << "bin_lo,bin_hi,count\n" << std::setprecision(12);
  for (std::size_t k = 0; k < h.counts.size(); ++k)
    out << h.edges[k] << ',' << h.edges[k + 1] << ',' << h.counts[k] << '\n';
}

void write_histogram_svg(const Histogram& h, const std::string& title, std::ostream& out) {
  const double W = 640, H = 360, pad = 40;
  const long top = std::max(1L, *std::max_element(h.counts.begin(), h.counts.end()));
  const double bw = (W - 2 * pad) / static_cast<double>(h.counts.size());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<text x=\"" << pad << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  out << std::fixed << std::setprecision(2);
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    const double bh = (H - 2 * pad) * static_cast<double>(h.counts[k]) / static_cast<double>(top);
    out << "<rect x=\"" << pad + k * bw << "\" y=\"" << H - pad - bh << "\" width=\"" << bw * 0.95
        << "\" height=\"" << bh << "\" fill=\"#4a78b0\"/>\n";
  }
  out << std::setprecision(4);
  out << "<text x=\"" << pad << "\" y=\"" << H - 15 << "\" font-family=\"sans-serif\" font-size=\"11\">"
      << h.edges.front() << "</text>\n";
  out << "<text x=\"" << W - pad - 30 << "\" y=\"" << H - 15 << "\" font-family=\"sans-serif\" font-size=\"11\">"
      << h.edges.back() << "</text>\n";
  out << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\"" << H - pad
      << "\" stroke=\"black\"/>\n</svg>\n";
}

Histogram emit_histogram(const std::vector<RatioRecord>& records, int bins, const std::string& stem) {
  std::vector<double> v;
  for (const auto& r : records) v.push_back(r.ratio);
  auto h = histogram(v, bins);
  std::ofstream csv(stem + ".csv"), svg(stem + ".svg");
  if (!csv || !svg) fail(ErrorCategory::InvalidInput, "cannot write histogram files at " + stem);
  write_histogram_csv(h, csv);
  write_histogram_svg(h, "gap-reduction ratio (" + std::to_string(records.size()) + " instances)", svg);
  return h;
}

}  // namespace mcmot
