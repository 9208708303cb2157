// mcmot: command-line front end (validate, calibrate, bound, ratio, report).

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <thread>

#include "mcmot/bnb.hpp"
#include "mcmot/calibration.hpp"
#include "mcmot/error.hpp"
#include "mcmot/io.hpp"
#include "mcmot/mccormick.hpp"
#include "mcmot/mot.hpp"
#include "mcmot/pipeline.hpp"
#include "mcmot/ratio.hpp"

using namespace mcmot;
using io::json;

namespace {

struct Options {
  std::string marginals, payoff = "maxsq", method = "mot", direction = "both", bounds = "default", out;
  std::string export_lp;
  std::vector<std::string> chains, sidecars;
  std::string marginals_out;
  std::string batch, histogram;
  int synthetic = 0;
  std::uint64_t seed = 1;
  int bins = 10;
  int workers = 1;
  int min_strikes = 2, max_strikes = 3;
  std::vector<std::string> report_files;
  BnBConfig bnb;
};

std::vector<std::string> g_inputs;

void emit(const std::string& path, const json& doc) {
  if (path.empty() || path == "-")
    std::cout << doc.dump(2) << '\n';
  else
    io::write_json_file(path, doc);
}

json run_doc(const std::string& command, json results, const json& config) {
  return {{"schema", "mcmot-run-v1"},
          {"command", command},
          {"results", std::move(results)},
          {"provenance", io::provenance(g_inputs, config)}};
}

PayoffSpec parse_payoff(const std::string& spec) {
  if (spec == "maxsq" || spec == "max_squared_increment") return PayoffSpec::max_squared_increment();
  auto colon = spec.find(':');
  if (colon != std::string::npos) {
    const auto head = spec.substr(0, colon), tail = spec.substr(colon + 1);
    if (head == "table" || head == "file") {
      g_inputs.push_back(tail);
      return io::payoff_from_json(io::read_json_file(tail));
    }
    double v = 0.0;
    try {
      v = std::stod(tail);
    } catch (...) {
      fail(ErrorCategory::InvalidInput, "bad number in payoff '" + spec + "'");
    }
    if (head == "basket") return PayoffSpec::basket_asian_call(v);
    if (head == "const") return PayoffSpec::constant_value(v);
  }
  if (std::filesystem::exists(spec)) {
    g_inputs.push_back(spec);
    return io::payoff_from_json(io::read_json_file(spec));
  }
  fail(ErrorCategory::InvalidInput, "unknown payoff '" + spec + "' (maxsq, basket:K, const:V or a payoff file)");
}

MarginalSystem load_marginals(const std::string& path) {
  g_inputs.push_back(path);
  return io::marginals_from_json(io::read_json_file(path));
}

std::vector<lp::Direction> directions(const std::string& d) {
  if (d == "min") return {lp::Direction::Minimize};
  if (d == "max") return {lp::Direction::Maximize};
  return {lp::Direction::Minimize, lp::Direction::Maximize};
}

std::string lp_path(const std::string& base, lp::Direction d, bool both) {
  if (!both) return base;
  const std::string tag = d == lp::Direction::Minimize ? ".min" : ".max";
  auto dot = base.rfind('.');
  return dot == std::string::npos ? base + tag : base.substr(0, dot) + tag + base.substr(dot);
}

void export_lp(const lp::LinearProgram& lp, const std::string& path) {
  std::ofstream f(path);
  if (!f) fail(ErrorCategory::InvalidInput, "cannot write " + path);
  lp::write_mps(lp, f);
}

json bnb_config_json(const BnBConfig& c) {
  return {{"gap_tolerance", c.gap_tolerance},   {"residual_tolerance", c.residual_tolerance},
          {"node_budget", c.node_budget},       {"time_budget_seconds", c.time_budget_seconds},
          {"workers", c.workers},               {"repair_every", c.repair_every},
          {"solver_feasibility_tol", c.lp.feasibility_tol}};
}

int cmd_validate(const Options& o) {
  auto sys = load_marginals(o.marginals);
  auto rep = validate_system(sys);
  emit(o.out, run_doc("validate", io::to_json(rep), json::object()));
  std::cerr << "validate: " << (rep.pass ? "pass" : "FAIL") << '\n';
  for (const auto& p : rep.problems) std::cerr << "  " << p << '\n';
  return rep.pass ? 0 : static_cast<int>(ErrorCategory::InvalidInput);
}

int cmd_calibrate(const Options& o) {
  if (o.chains.empty() || o.chains.size() != o.sidecars.size() || o.chains.size() > 2)
    fail(ErrorCategory::InvalidInput, "give one or two --chain files, each with a --sidecar");
  json assets = json::array();
  std::vector<std::vector<MarginalLaw>> priced;
  for (std::size_t k = 0; k < o.chains.size(); ++k) {
    g_inputs.push_back(o.chains[k]);
    g_inputs.push_back(o.sidecars[k]);
    const std::string id = k == 0 ? "X" : "Y";
    auto slices = io::read_option_chain(o.chains[k], o.sidecars[k]);
    auto res = calibrate(slices, lp::config_from_env(), id);
    auto diag = feasibility_diagnosis(res, slices);
    assets.push_back(io::to_json(res, diag, id));
    priced.push_back(price_marginals(res, slices.front().forward));
    std::cerr << "calibrate " << id << ": objective " << res.objective << ", spread floor " << res.spread_floor
              << (res.all_quotes_feasible ? " (all quotes feasible)" : " (some quotes infeasible)") << '\n';
  }
  emit(o.out, run_doc("calibrate", assets, json::object()));
  if (!o.marginals_out.empty()) {
    if (priced.size() != 2) fail(ErrorCategory::InvalidInput, "--marginals-out needs two chains");
    io::write_json_file(o.marginals_out, io::to_json(MarginalSystem(priced[0], priced[1])));
  }
  return 0;
}

int cmd_bound(const Options& o) {
  auto sys = load_marginals(o.marginals);
  auto payoff = parse_payoff(o.payoff);
  auto check = validate_system(sys);
  if (!check.pass)
    fail(ErrorCategory::InvalidInput, "marginals fail validation: " +
                                          (check.problems.empty() ? std::string("?") : check.problems.front()));
  CapacityBounds bounds;
  if (o.method != "mot") {
    if (o.bounds == "default") {
      bounds = default_bounds(sys);
    } else {
      g_inputs.push_back(o.bounds);
      bounds = io::bounds_from_json(io::read_json_file(o.bounds));
    }
  }
  const auto dirs = directions(o.direction);
  const bool both = dirs.size() == 2;
  json results = json::array();
  for (auto d : dirs) {
    const auto t0 = std::chrono::steady_clock::now();
    if (o.method == "mot") {
      MotInstance inst{sys, payoff, d};
      if (!o.export_lp.empty()) export_lp(build_mot_lp(inst), lp_path(o.export_lp, d, both));
      auto r = solve_mot(inst);
      results.push_back(io::to_json(r));
      std::cerr << "mot " << (d == lp::Direction::Minimize ? "min" : "max") << " = " << r.value;
    } else if (o.method == "mccormick") {
      McCormickInstance inst{sys, payoff, bounds, d};
      if (!o.export_lp.empty()) export_lp(build_mccormick_lp(inst), lp_path(o.export_lp, d, both));
      auto r = solve_mccormick(inst);
      results.push_back(io::to_json(r));
      std::cerr << "mccormick " << (d == lp::Direction::Minimize ? "min" : "max") << " = " << r.value;
    } else {
      McCormickInstance inst{sys, payoff, bounds, d};
      if (!o.export_lp.empty()) export_lp(build_mccormick_lp(inst), lp_path(o.export_lp, d, both));
      auto r = solve_bicausal(inst, o.bnb);
      results.push_back(io::to_json(r));
      std::cerr << "bicausal " << (d == lp::Direction::Minimize ? "min" : "max") << " in [" << r.lower_bound
                << ", " << r.upper_bound << "] (" << termination_name(r.terminated) << ", " << r.nodes_explored
                << " nodes explored)";
    }
    std::cerr << "  " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  }
  json cfg{{"method", o.method}, {"direction", o.direction}, {"bounds", o.bounds}, {"payoff", o.payoff}};
  if (o.method == "bicausal") cfg["bnb"] = bnb_config_json(o.bnb);
  emit(o.out, run_doc("bound", results, cfg));
  return 0;
}

struct BatchItem {
  std::string label;
  MarginalSystem system;
  PayoffSpec payoff;
};

std::vector<BatchItem> read_batch(const std::string& path) {
  g_inputs.push_back(path);
  const auto doc = io::read_json_file(path);
  if (!doc.contains("schema") || doc["schema"] != "mcmot-batch-v1")
    fail(ErrorCategory::Schema, path + ": schema: expected \"mcmot-batch-v1\"");
  if (!doc.contains("instances") || !doc["instances"].is_array())
    fail(ErrorCategory::Schema, path + ": missing array 'instances'");
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<BatchItem> items;
  for (std::size_t i = 0; i < doc["instances"].size(); ++i) {
    const auto& e = doc["instances"][i];
    const std::string where = path + ": instances[" + std::to_string(i) + "]";
    if (!e.is_object() || !e.contains("marginals")) fail(ErrorCategory::Schema, where + ": missing 'marginals'");
    BatchItem it;
    it.label = e.value("label", "instance-" + std::to_string(i));
    if (e["marginals"].is_string()) {
      auto p = (base / e["marginals"].get<std::string>()).string();
      it.system = load_marginals(p);
    } else {
      it.system = io::marginals_from_json(e["marginals"]);
    }
    if (!e.contains("payoff")) fail(ErrorCategory::Schema, where + ": missing 'payoff'");
    if (e["payoff"].is_string()) {
      auto s = e["payoff"].get<std::string>();
      auto colon = s.find(':');
      if (colon != std::string::npos && (s.substr(0, colon) == "table" || s.substr(0, colon) == "file"))
        s = s.substr(0, colon + 1) + (base / s.substr(colon + 1)).string();
      it.payoff = parse_payoff(s);
    } else {
      it.payoff = io::payoff_from_json(e["payoff"]);
    }
    items.push_back(std::move(it));
  }
  return items;
}

int cmd_ratio(const Options& o) {
  if (o.batch.empty() == (o.synthetic <= 0)) fail(ErrorCategory::InvalidInput, "give exactly one of --batch or --synthetic");
  const int n = o.synthetic > 0 ? o.synthetic : 0;
  std::vector<BatchItem> items;
  if (!o.batch.empty()) items = read_batch(o.batch);
  const std::size_t count = items.empty() ? static_cast<std::size_t>(n) : items.size();

  PipelineShape shape;
  shape.chain.min_strikes = o.min_strikes;
  shape.chain.max_strikes = o.max_strikes;
  std::vector<RatioRecord> records(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next++) < count;) {
      try {
        if (items.empty()) {
          auto inst = synthetic_pipeline_instance(o.seed, static_cast<int>(i), shape);
          records[i] = ratio_record(inst.label, inst.system, inst.payoff);
        } else {
          records[i] = ratio_record(items[i].label, items[i].system, items[i].payoff);
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < std::max(1, o.workers); ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < count; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      fail(e.category(), "instance " + std::to_string(i) + ": " + e.what());
    }
  }

  if (o.out.empty() || o.out == "-") {
    write_ratio_csv(records, std::cout);
  } else {
    std::ofstream f(o.out);
    if (!f) fail(ErrorCategory::InvalidInput, "cannot write " + o.out);
    write_ratio_csv(records, f);
    json recs = json::array();
    for (const auto& r : records) recs.push_back(io::to_json(r));
    json cfg{{"seed", o.seed}, {"synthetic", o.synthetic}, {"bins", o.bins},
             {"ratio_convention", "1 when the MOT interval is narrower than 1e-9"}};
    io::write_json_file(o.out + ".json", run_doc("ratio", recs, cfg));
  }
  if (!o.histogram.empty()) emit_histogram(records, o.bins, o.histogram);
  double sum = 0.0;
  int degenerate = 0;
  for (const auto& r : records) {
    sum += r.ratio;
    degenerate += r.degenerate;
  }
  std::cerr << "ratio: " << count << " instances, mean " << (count ? sum / count : 0.0);
  if (degenerate) std::cerr << ", " << degenerate << " with a degenerate MOT interval (ratio set to 1)";
  std::cerr << '\n';
  return 0;
}

void summarize_result(const json& r, std::ostream& out) {
  const std::string schema = r.value("schema", "");
  out << std::setprecision(8);
  if (schema == "mcmot-bound-v1") {
    out << "  " << std::left << std::setw(10) << r["method"].get<std::string>() << r["direction"].get<std::string>()
        << "  value " << r["value"].get<double>() << "  duality gap " << r["hedge"]["duality_gap"].get<double>()
        << "  causality residual " << r["residuals"]["causality"].get<double>() << '\n';
  } else if (schema == "mcmot-bnb-v1") {
    out << "  bicausal  " << r["direction"].get<std::string>() << "  [" << r["lower_bound"].get<double>() << ", "
        << r["upper_bound"].get<double>() << "]  " << r["terminated"].get<std::string>() << ", "
        << r["nodes"]["explored"].get<long>() << " nodes\n";
  } else if (schema == "mcmot-calib-v1") {
    out << "  calibration " << r["asset"].get<std::string>() << "  objective " << r["objective"].get<double>()
        << "  spread floor " << r["spread_floor"].get<double>()
        << (r["all_quotes_feasible"].get<bool>() ? "  all quotes feasible\n" : "  INFEASIBLE QUOTES\n");
  } else if (schema == "mcmot-validation-v1") {
    out << "  validation " << (r["pass"].get<bool>() ? "pass" : "FAIL") << '\n';
  } else if (r.contains("ratio")) {
    out << "  ratio " << r["label"].get<std::string>() << "  " << r["ratio"].get<double>() << '\n';
  }
}

int cmd_report(const Options& o) {
  if (o.report_files.empty() && o.marginals.empty())
    fail(ErrorCategory::InvalidInput, "report needs result files or --marginals");
  for (const auto& f : o.report_files) {
    const auto doc = io::read_json_file(f);
    if (doc.value("schema", "") != "mcmot-run-v1") fail(ErrorCategory::Schema, f + ": not an mcmot run file");
    std::cout << f << " (" << doc["command"].get<std::string>() << ", version "
              << doc["provenance"]["version"].get<std::string>() << ")\n";
    const auto& res = doc["results"];
    if (res.is_array())
      for (const auto& r : res) summarize_result(r, std::cout);
    else
      summarize_result(res, std::cout);
  }
  if (!o.marginals.empty()) {
    auto sys = load_marginals(o.marginals);
    auto payoff = parse_payoff(o.payoff);
    auto bounds = default_bounds(sys);
    std::cout << "bounds for " << o.marginals << " (payoff " << o.payoff << ")\n" << std::setprecision(8);
    double lo[3], hi[3];
    lo[0] = solve_mot({sys, payoff, lp::Direction::Minimize}).value;
    hi[0] = solve_mot({sys, payoff, lp::Direction::Maximize}).value;
    lo[1] = solve_mccormick({sys, payoff, bounds, lp::Direction::Minimize}).value;
    hi[1] = solve_mccormick({sys, payoff, bounds, lp::Direction::Maximize}).value;
    auto bmin = solve_bicausal({sys, payoff, bounds, lp::Direction::Minimize}, o.bnb);
    auto bmax = solve_bicausal({sys, payoff, bounds, lp::Direction::Maximize}, o.bnb);
    lo[2] = bmin.lower_bound;
    hi[2] = bmax.upper_bound;
    const char* names[3] = {"mot", "mccormick", "bicausal"};
    for (int k = 0; k < 3; ++k) std::cout << "  " << std::left << std::setw(10) << names[k] << "[" << lo[k] << ", " << hi[k] << "]\n";
    std::cout << "  gap-reduction ratio " << compute_ratio({lo[0], hi[0]}, {lo[1], hi[1]}) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcmot: model-free price bounds via martingale optimal transport"};
  app.require_subcommand(1);
  Options o;

  auto* validate = app.add_subcommand("validate", "check equal means and convex order of a marginal system");
  validate->add_option("--marginals", o.marginals, "marginal system (JSON)")->required()->check(CLI::ExistingFile);
  validate->add_option("-o,--out", o.out, "report path (default stdout)");

  auto* calib = app.add_subcommand("calibrate", "fit martingale marginals to bid/ask call quotes");
  calib->add_option("--chain", o.chains, "quotes CSV (one per asset, X first)")->required()->check(CLI::ExistingFile);
  calib->add_option("--sidecar", o.sidecars, "forward/discount JSON per chain")->required()->check(CLI::ExistingFile);
  calib->add_option("-o,--out", o.out, "result path (default stdout)");
  calib->add_option("--marginals-out", o.marginals_out, "write the calibrated system (two chains) here");

  auto add_bnb = [&](CLI::App* sub) {
    sub->add_option("--gap-tol", o.bnb.gap_tolerance, "absolute gap tolerance")->capture_default_str();
    sub->add_option("--residual-tol", o.bnb.residual_tolerance, "bicausal residual tolerance")->capture_default_str();
    sub->add_option("--node-budget", o.bnb.node_budget)->capture_default_str();
    sub->add_option("--time-budget", o.bnb.time_budget_seconds, "seconds")->capture_default_str();
    sub->add_option("--workers", o.bnb.workers, "parallel child solves (1 = reproducible)")->capture_default_str();
  };

  auto* bound = app.add_subcommand("bound", "price bounds for an exotic payoff");
  bound->add_option("--marginals", o.marginals)->required()->check(CLI::ExistingFile);
  bound->add_option("--payoff", o.payoff, "maxsq | basket:K | const:V | payoff JSON")->capture_default_str();
  bound->add_option("--method", o.method)->check(CLI::IsMember({"mot", "mccormick", "bicausal"}))->capture_default_str();
  bound->add_option("--direction", o.direction)->check(CLI::IsMember({"min", "max", "both"}))->capture_default_str();
  bound->add_option("--bounds", o.bounds, "default | capacity bounds JSON")->capture_default_str();
  bound->add_option("--export-lp", o.export_lp, "write the LP in MPS format");
  bound->add_option("-o,--out", o.out);
  add_bnb(bound);

  auto* ratio = app.add_subcommand("ratio", "gap-reduction ratios over a batch");
  ratio->add_option("--batch", o.batch, "batch JSON (mcmot-batch-v1)")->check(CLI::ExistingFile);
  ratio->add_option("--synthetic", o.synthetic, "number of synthetic calibrate->bound instances");
  ratio->add_option("--seed", o.seed)->capture_default_str();
  ratio->add_option("--min-strikes", o.min_strikes)->capture_default_str();
  ratio->add_option("--max-strikes", o.max_strikes)->capture_default_str();
  ratio->add_option("--workers", o.workers)->capture_default_str();
  ratio->add_option("-o,--out", o.out, "CSV path; a JSON record file is written next to it");
  ratio->add_option("--histogram", o.histogram, "write <stem>.svg and <stem>.csv");
  ratio->add_option("--bins", o.bins)->capture_default_str();

  auto* report = app.add_subcommand("report", "human-readable summary");
  report->add_option("files", o.report_files, "run files from other commands")->check(CLI::ExistingFile);
  report->add_option("--marginals", o.marginals, "compute all three intervals for this system")
      ->check(CLI::ExistingFile);
  report->add_option("--payoff", o.payoff)->capture_default_str();
  add_bnb(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorCategory::InvalidInput);
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*calib) return cmd_calibrate(o);
    if (*bound) return cmd_bound(o);
    if (*ratio) return cmd_ratio(o);
    if (*report) return cmd_report(o);
  } catch (const Error& e) {
    std::cerr << "error [" << category_name(e.category()) << "]: " << e.what() << '\n';
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
