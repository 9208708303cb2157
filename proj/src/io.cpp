#include "mcmot/io.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "mcmot/error.hpp"

#ifndef MCMOT_VERSION
#define MCMOT_VERSION "0.0.0"
#endif

namespace mcmot::io {

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  fail(ErrorCategory::Schema, where + ": " + what);
}

const json& field(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) schema_error(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, "missing field '" + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) schema_error(where, "expected a number");
  return v.get<double>();
}

std::vector<double> numbers(const json& v, const std::string& where) {
  if (!v.is_array()) schema_error(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Shape shape_of(const json& v, const std::string& where) {
  if (!v.is_array()) schema_error(where, "expected an array of sizes");
  Shape s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_unsigned()) schema_error(where + "[" + std::to_string(i) + "]", "expected a size");
    s.push_back(v[i].get<std::size_t>());
  }
  return s;
}

void expect_schema(const json& doc, const std::string& name) {
  const auto& s = field(doc, "schema", "document");
  if (!s.is_string() || s.get<std::string>() != name)
    schema_error("schema", "expected \"" + name + "\", found " + s.dump());
}

// Invalid-input errors from constructors become schema errors with a location.
template <class F>
auto located(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::InvalidInput) schema_error(where, e.what());
    throw;
  }
}

std::string point_label(double v) {
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

std::string index_label(const MultiIndex& idx) {
  std::string s;
  for (std::size_t k = 0; k < idx.size(); ++k) s += (k ? "," : "") + std::to_string(idx[k]);
  return s;
}

const char* direction_name(lp::Direction d) { return d == lp::Direction::Minimize ? "min" : "max"; }

}  // namespace

const char* tool_version() { return MCMOT_VERSION; }

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::InvalidInput, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCategory::Schema, path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) fail(ErrorCategory::InvalidInput, "cannot write " + path);
  out << doc.dump(2) << '\n';
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::InvalidInput, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorCategory::Numerical, "sha256 failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

json to_json(const MarginalSystem& system) {
  json assets = json::array();
  for (Asset a : {Asset::X, Asset::Y}) {
    json laws = json::array();
    for (const auto& law : system.of(a))
      laws.push_back({{"maturity", law.grid().maturity_index()}, {"points", law.points()}, {"masses", law.masses()}});
    assets.push_back({{"id", system.ids[static_cast<int>(a)]}, {"laws", laws}});
  }
  return {{"schema", "mcmot-marginals-v1"}, {"assets", assets}};
}

MarginalSystem marginals_from_json(const json& doc) {
  expect_schema(doc, "mcmot-marginals-v1");
  const auto& assets = field(doc, "assets", "document");
  if (!assets.is_array() || assets.size() != 2) schema_error("assets", "expected exactly two assets");
  std::array<std::vector<MarginalLaw>, 2> laws;
  std::array<std::string, 2> ids;
  for (int a = 0; a < 2; ++a) {
    const std::string where = "assets[" + std::to_string(a) + "]";
    const auto& id = field(assets[a], "id", where);
    if (!id.is_string()) schema_error(where + ".id", "expected a string");
    ids[a] = id.get<std::string>();
    const auto& list = field(assets[a], "laws", where);
    if (!list.is_array() || list.empty()) schema_error(where + ".laws", "expected a non-empty array");
    for (std::size_t t = 0; t < list.size(); ++t) {
      const std::string lw = where + ".laws[" + std::to_string(t) + "]";
      if (list[t].contains("maturity") && list[t]["maturity"] != static_cast<int>(t + 1))
        schema_error(lw + ".maturity", "laws must be listed in maturity order from 1");
      auto pts = numbers(field(list[t], "points", lw), lw + ".points");
      auto ms = numbers(field(list[t], "masses", lw), lw + ".masses");
      laws[a].push_back(located(lw, [&] {
        return MarginalLaw(SupportGrid(ids[a], static_cast<int>(t + 1), pts), ms);
      }));
    }
  }
  auto sys = located("assets", [&] { return MarginalSystem(laws[0], laws[1]); });
  sys.ids = ids;
  return sys;
}

json to_json(const ValidationReport& report) {
  json pairs = json::array();
  for (const auto& p : report.pairs)
    pairs.push_back({{"asset", asset_name(p.asset)},
                     {"earlier", p.earlier},
                     {"later", p.earlier + 1},
                     {"mean_gap", p.mean_gap},
                     {"worst_call_violation", p.worst_violation},
                     {"mean_ok", p.mean_ok},
                     {"convex_order_ok", p.convex_ok}});
  return {{"schema", "mcmot-validation-v1"}, {"pass", report.pass}, {"pairs", pairs}, {"problems", report.problems}};
}

json to_json(const CouplingTensor& coupling) {
  return {{"schema", "mcmot-coupling-v1"},
          {"horizon", coupling.horizon()},
          {"shape", coupling.shape()},
          {"axis_points", coupling.grid().axis_points},
          {"masses", coupling.masses()}};
}

CouplingTensor coupling_from_json(const json& doc) {
  expect_schema(doc, "mcmot-coupling-v1");
  ProductGrid grid;
  const auto& h = field(doc, "horizon", "document");
  if (!h.is_number_integer() || h.get<int>() < 1) schema_error("horizon", "expected a positive integer");
  grid.horizon = h.get<int>();
  const auto shape = shape_of(field(doc, "shape", "document"), "shape");
  const auto& axes = field(doc, "axis_points", "document");
  if (!axes.is_array() || axes.size() != shape.size() || shape.size() != 2u * grid.horizon)
    schema_error("axis_points", "expected one point list per axis (2·horizon)");
  for (std::size_t k = 0; k < axes.size(); ++k) {
    grid.axis_points.push_back(numbers(axes[k], "axis_points[" + std::to_string(k) + "]"));
    if (grid.axis_points.back().size() != shape[k]) schema_error("shape", "disagrees with axis_points");
  }
  auto masses = numbers(field(doc, "masses", "document"), "masses");
  if (masses.size() != element_count(shape)) schema_error("masses", "length disagrees with shape");
  return located("masses", [&] { return CouplingTensor(grid, masses, 1e-9); });
}

json to_json(const CapacityBounds& bounds) {
  json fams = json::object();
  for (const auto& [key, table] : bounds.tables) {
    json entries = json::object();
    MultiIndex idx(table.shape.size(), 0);
    for (std::size_t f = 0; f < table.lower.size(); ++f) {
      unflatten(f, table.shape, idx);
      entries[index_label(idx)] = {table.lower[f], table.upper[f]};
    }
    fams[kind_name(key.kind)][std::to_string(key.t)] = {{"shape", table.shape}, {"entries", entries}};
  }
  return {{"schema", "mcmot-bounds-v1"}, {"horizon", bounds.horizon}, {"families", fams}};
}

CapacityBounds bounds_from_json(const json& doc) {
  expect_schema(doc, "mcmot-bounds-v1");
  CapacityBounds b;
  const auto& h = field(doc, "horizon", "document");
  if (!h.is_number_integer()) schema_error("horizon", "expected an integer");
  b.horizon = h.get<int>();
  const auto& fams = field(doc, "families", "document");
  if (!fams.is_object()) schema_error("families", "expected an object");
  for (const auto& [name, per_t] : fams.items()) {
    const auto kind = located("families." + name, [&] {
      try {
        return kind_from_name(name);
      } catch (const Error& e) {
        schema_error("families." + name, e.what());
      }
    });
    if (!per_t.is_object()) schema_error("families." + name, "expected an object keyed by t");
    for (const auto& [tkey, tab] : per_t.items()) {
      const std::string where = "families." + name + "." + tkey;
      int t = 0;
      try {
        t = std::stoi(tkey);
      } catch (...) {
        schema_error(where, "t key must be an integer");
      }
      BoundTable table;
      table.shape = shape_of(field(tab, "shape", where), where + ".shape");
      const std::size_t n = element_count(table.shape);
      table.lower.assign(n, 0.0);
      table.upper.assign(n, 1.0);
      std::vector<bool> seen(n, false);
      const auto& entries = field(tab, "entries", where);
      if (!entries.is_object()) schema_error(where + ".entries", "expected an object keyed by multi-index");
      for (const auto& [ikey, lu] : entries.items()) {
        const std::string ew = where + ".entries[" + ikey + "]";
        MultiIndex idx;
        std::stringstream ss(ikey);
        std::string part;
        while (std::getline(ss, part, ',')) {
          try {
            idx.push_back(static_cast<std::size_t>(std::stoul(part)));
          } catch (...) {
            schema_error(ew, "bad multi-index");
          }
        }
        if (idx.size() != table.shape.size()) schema_error(ew, "multi-index rank disagrees with shape");
        for (std::size_t k = 0; k < idx.size(); ++k)
          if (idx[k] >= table.shape[k]) schema_error(ew, "multi-index out of range");
        auto pair = numbers(lu, ew);
        if (pair.size() != 2) schema_error(ew, "expected [lower, upper]");
        const std::size_t f = flatten(idx, table.shape);
        table.lower[f] = pair[0];
        table.upper[f] = pair[1];
        seen[f] = true;
      }
      for (std::size_t f = 0; f < n; ++f)
        if (!seen[f]) schema_error(where, "missing entries (every grid point needs [lower, upper])");
      b.tables[{kind, t}] = std::move(table);
    }
  }
  return b;
}

json to_json(const PayoffSpec& payoff) {
  json j{{"schema", "mcmot-payoff-v1"}, {"kind", payoff_kind_name(payoff.kind)}};
  switch (payoff.kind) {
    case PayoffKind::BasketAsianCall: j["strike"] = payoff.strike; break;
    case PayoffKind::Constant: j["value"] = payoff.constant; break;
    case PayoffKind::Table:
      j["shape"] = payoff.table_shape;
      j["values"] = payoff.table_values;
      break;
    case PayoffKind::MaxSquaredIncrement: break;
  }
  return j;
}

PayoffSpec payoff_from_json(const json& doc) {
  expect_schema(doc, "mcmot-payoff-v1");
  std::string kind = "table";
  if (doc.contains("kind")) {
    if (!doc["kind"].is_string()) schema_error("kind", "expected a string");
    kind = doc["kind"].get<std::string>();
  }
  return located("payoff", [&]() -> PayoffSpec {
    switch (payoff_kind_from_name(kind)) {
      case PayoffKind::BasketAsianCall:
        return PayoffSpec::basket_asian_call(number(field(doc, "strike", "document"), "strike"));
      case PayoffKind::MaxSquaredIncrement: return PayoffSpec::max_squared_increment();
      case PayoffKind::Constant: return PayoffSpec::constant_value(number(field(doc, "value", "document"), "value"));
      case PayoffKind::Table:
        return PayoffSpec::table(shape_of(field(doc, "shape", "document"), "shape"),
                                 numbers(field(doc, "values", "document"), "values"));
    }
    schema_error("kind", "unsupported");
  });
}

json to_json(const BoundResult& r) {
  const auto& grid = r.coupling.grid();
  const int n = grid.horizon;
  json statics = json::object(), dynamics = json::object();
  for (Asset a : {Asset::X, Asset::Y}) {
    const int ai = static_cast<int>(a);
    json st = json::array(), dy = json::array();
    for (int t = 1; t <= n; ++t) {
      json legs = json::object();
      const auto& pts = grid.axis_points[grid.axis(a, t)];
      if (static_cast<std::size_t>(t - 1) < r.hedge.static_legs[ai].size())
        for (std::size_t i = 0; i < pts.size(); ++i) legs[point_label(pts[i])] = r.hedge.static_legs[ai][t - 1][i];
      st.push_back({{"maturity", t}, {"legs", legs}});
    }
    for (int t = 1; t < n; ++t) {
      if (static_cast<std::size_t>(t - 1) >= r.hedge.dynamic_legs[ai].size()) break;
      const auto axes = joint_history_axes(t, n);
      Shape hs;
      for (auto ax : axes) hs.push_back(grid.axis_points[ax].size());
      json legs = json::object();
      MultiIndex idx;
      const auto& vals = r.hedge.dynamic_legs[ai][t - 1];
      for (std::size_t f = 0; f < vals.size(); ++f) {
        unflatten(f, hs, idx);
        std::string lab;
        for (std::size_t k = 0; k < axes.size(); ++k) {
          const bool is_x = static_cast<int>(axes[k]) < n;
          const int tt = static_cast<int>(axes[k]) % n + 1;
          lab += (k ? "," : "") + std::string(is_x ? "x" : "y") + std::to_string(tt) + "=" +
                 point_label(grid.axis_points[axes[k]][idx[k]]);
        }
        legs[lab] = vals[f];
      }
      dy.push_back({{"maturity", t}, {"legs", legs}});
    }
    statics[asset_name(a)] = st;
    dynamics[asset_name(a)] = dy;
  }
  return {{"schema", "mcmot-bound-v1"},
          {"method", r.method},
          {"direction", direction_name(r.direction)},
          {"value", r.value},
          {"lp", {{"rows", r.lp_rows}, {"cols", r.lp_cols}, {"iterations", r.iterations}}},
          {"residuals",
           {{"martingale", r.residuals.martingale},
            {"causality", r.residuals.causality},
            {"anticausality", r.residuals.anticausality}}},
          {"hedge",
           {{"dual_value", r.hedge.dual_value},
            {"duality_gap", r.hedge.duality_gap},
            {"subhedge_slack", r.hedge.subhedge_slack},
            {"static", statics},
            {"dynamic", dynamics}}},
          {"coupling", to_json(r.coupling)}};
}

json to_json(const BnBReport& r) {
  json j{{"schema", "mcmot-bnb-v1"},
         {"method", "bicausal"},
         {"direction", direction_name(r.direction)},
         {"lower_bound", r.lower_bound},
         {"upper_bound", r.upper_bound},
         {"root_relaxation", r.root_relaxation},
         {"terminated", termination_name(r.terminated)},
         {"nodes", {{"explored", r.nodes_explored}, {"open", r.nodes_open}}},
         {"incumbent_updates", r.incumbent_updates}};
  if (r.incumbent) {
    j["incumbent_value"] = r.incumbent_value;
    j["incumbent_residuals"] = {{"bicausal", r.max_residual_of_incumbent},
                                {"martingale", r.incumbent_martingale_residual}};
    j["incumbent"] = to_json(*r.incumbent);
  } else {
    j["incumbent"] = nullptr;
  }
  return j;
}

json to_json(const CalibrationResult& r, const FeasibilityDiagnosis& d, const std::string& asset) {
  json marg = json::array();
  for (const auto& m : r.marginals)
    marg.push_back({{"maturity", m.grid().maturity_index()}, {"points", m.points()}, {"masses", m.masses()}});
  json quotes = json::array();
  for (const auto& q : d.quotes)
    quotes.push_back({{"maturity", q.maturity_index},
                      {"strike", q.strike},
                      {"fitted_scaled", q.fitted},
                      {"distance", q.distance},
                      {"excess", q.excess},
                      {"outside", q.outside}});
  return {{"schema", "mcmot-calib-v1"},
          {"asset", asset},
          {"objective", r.objective},
          {"spread_floor", r.spread_floor},
          {"all_quotes_feasible", r.all_quotes_feasible},
          {"shape", r.shape},
          {"joint", r.joint},
          {"scaled_marginals", marg},
          {"fitted_scaled_prices", r.fitted_scaled_prices},
          {"diagnosis", {{"excess", d.excess}, {"quotes", quotes}}}};
}

json to_json(const RatioRecord& r) {
  return {{"label", r.label},     {"mot_min", r.mot_min}, {"mot_max", r.mot_max}, {"mc_min", r.mc_min},
          {"mc_max", r.mc_max},   {"ratio", r.ratio},     {"degenerate_mot_gap", r.degenerate}};
}

std::vector<MarketSlice> read_option_chain(const std::string& csv_path, const std::string& sidecar_path) {
  std::ifstream in(csv_path);
  if (!in) fail(ErrorCategory::InvalidInput, "cannot open " + csv_path);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  if (!std::getline(in, line)) fail(ErrorCategory::Schema, csv_path + ": empty file");
  ++lineno;
  if (trim(line) != "maturity_index,strike,bid,ask")
    fail(ErrorCategory::Schema, csv_path + ":1: header must be maturity_index,strike,bid,ask");

  std::map<int, MarketSlice> by_t;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = csv_path + ":" + std::to_string(lineno);
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (cells.size() != 4) fail(ErrorCategory::Schema, where + ": expected 4 fields");
    OptionQuote q;
    try {
      std::size_t used = 0;
      q.maturity_index = std::stoi(cells[0], &used);
      if (used != cells[0].size()) throw std::invalid_argument("int");
      double* dst[3] = {&q.strike, &q.bid, &q.ask};
      for (int k = 0; k < 3; ++k) {
        *dst[k] = std::stod(cells[k + 1], &used);
        if (used != cells[k + 1].size()) throw std::invalid_argument("num");
      }
    } catch (const std::exception&) {
      fail(ErrorCategory::Schema, where + ": unparsable number");
    }
    auto& s = by_t[q.maturity_index];
    s.maturity_index = q.maturity_index;
    s.quotes.push_back(q);
  }

  const json side = read_json_file(sidecar_path);
  if (!side.is_object()) fail(ErrorCategory::Schema, sidecar_path + ": expected an object keyed by maturity");
  for (const auto& [key, val] : side.items()) {
    int t = 0;
    try {
      t = std::stoi(key);
    } catch (...) {
      fail(ErrorCategory::Schema, sidecar_path + ": key '" + key + "' is not a maturity index");
    }
    const std::string where = sidecar_path + ": " + key;
    auto& s = by_t[t];
    s.maturity_index = t;
    s.forward = number(field(val, "forward", where), where + ".forward");
    s.discount = val.contains("discount") ? number(val["discount"], where + ".discount") : 1.0;
    if (val.contains("extra_points")) s.extra_points = numbers(val["extra_points"], where + ".extra_points");
  }
  std::vector<MarketSlice> out;
  int expect = 1;
  for (auto& [t, s] : by_t) {
    if (t != expect++) fail(ErrorCategory::Schema, csv_path + ": maturities must be 1..N without gaps");
    if (!side.contains(std::to_string(t)))
      fail(ErrorCategory::Schema, sidecar_path + ": no forward for maturity " + std::to_string(t));
    std::stable_sort(s.quotes.begin(), s.quotes.end(),
                     [](const OptionQuote& a, const OptionQuote& b) { return a.strike < b.strike; });
    out.push_back(std::move(s));
  }
  if (out.empty()) fail(ErrorCategory::Schema, csv_path + ": no quotes");
  for (const auto& s : out) located(csv_path, [&] { s.validate(); return 0; });
  return out;
}

void write_option_chain(const std::vector<MarketSlice>& slices, const std::string& csv_path,
                        const std::string& sidecar_path) {
  std::ofstream csv(csv_path);
  if (!csv) fail(ErrorCategory::InvalidInput, "cannot write " + csv_path);
  csv << "maturity_index,strike,bid,ask\n" << std::setprecision(17);
  json side = json::object();
  for (const auto& s : slices) {
    for (const auto& q : s.quotes) csv << q.maturity_index << ',' << q.strike << ',' << q.bid << ',' << q.ask << '\n';
    json e{{"forward", s.forward}, {"discount", s.discount}};
    if (!s.extra_points.empty()) e["extra_points"] = s.extra_points;
    side[std::to_string(s.maturity_index)] = e;
  }
  write_json_file(sidecar_path, side);
}

json provenance(const std::vector<std::string>& input_paths, const json& config) {
  json inputs = json::array();
  for (const auto& p : input_paths) inputs.push_back({{"path", p}, {"sha256", sha256_file(p)}});
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ts;
  ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return {{"tool", "mcmot"}, {"version", tool_version()}, {"inputs", inputs}, {"config", config},
          {"timestamp", ts.str()}};
}

}  // namespace mcmot::io
