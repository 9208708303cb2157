#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "mcmot/io.hpp"
#include "mcmot/synthetic.hpp"

namespace fs = std::filesystem;
using mcmot::io::json;

namespace {

const std::string kCli = MCMOT_CLI_PATH;
const std::string kFixture = std::string(MCMOT_DATA_DIR) + "/two_asset_example.json";

fs::path work_dir() {
  auto d = fs::temp_directory_path() / "mcmot_cli_tests";
  fs::create_directories(d);
  return d;
}

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " 2>" + (work_dir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("validate passes on the bundled example") {
  const auto out = work_dir() / "validate.json";
  REQUIRE(run("validate --marginals " + kFixture + " -o " + out.string()) == 0);
  auto doc = mcmot::io::read_json_file(out.string());
  CHECK(doc["results"]["pass"] == true);
  CHECK(doc["provenance"]["inputs"][0]["sha256"].get<std::string>().size() == 64);
}

TEST_CASE("mccormick bounds on the bundled example") {
  const auto out = work_dir() / "mc.json";
  REQUIRE(run("bound --method mccormick --direction both --marginals " + kFixture + " -o " + out.string()) == 0);
  auto doc = mcmot::io::read_json_file(out.string());
  REQUIRE(doc["results"].size() == 2);
  CHECK(doc["results"][0]["value"].get<double>() == doctest::Approx(21.50).epsilon(0.01 / 21.5));
  CHECK(doc["results"][1]["value"].get<double>() == doctest::Approx(24.40).epsilon(0.01 / 24.4));
}

TEST_CASE("bicausal interval contains the mccormick side and runs are reproducible") {
  const auto a = work_dir() / "b1.json", b = work_dir() / "b2.json", mc = work_dir() / "mc2.json";
  REQUIRE(run("bound --method bicausal --marginals " + kFixture + " -o " + a.string()) == 0);
  REQUIRE(run("bound --method bicausal --marginals " + kFixture + " -o " + b.string()) == 0);
  REQUIRE(run("bound --method mccormick --marginals " + kFixture + " -o " + mc.string()) == 0);
  auto da = mcmot::io::read_json_file(a.string()), db = mcmot::io::read_json_file(b.string());
  auto dm = mcmot::io::read_json_file(mc.string());
  CHECK(da["results"][0]["lower_bound"].get<double>() >= dm["results"][0]["value"].get<double>() - 1e-6);
  CHECK(da["results"][1]["upper_bound"].get<double>() <= dm["results"][1]["value"].get<double>() + 1e-6);
  da["provenance"].erase("timestamp");
  db["provenance"].erase("timestamp");
  CHECK(da.dump() == db.dump());
}

TEST_CASE("ratio batch where mccormick equals mot gives ones") {
  auto dir = work_dir();
  mcmot::MarginalSystem single({mcmot::MarginalLaw({8, 10, 12}, {0.25, 0.5, 0.25})},
                               {mcmot::MarginalLaw({18, 22}, {0.5, 0.5})});
  mcmot::io::write_json_file((dir / "single.json").string(), mcmot::io::to_json(single));
  json batch{{"schema", "mcmot-batch-v1"},
             {"instances",
              {{{"label", "flat"}, {"marginals", "single.json"}, {"payoff", "const:3"}},
               {{"label", "one-period"}, {"marginals", "single.json"}, {"payoff", json{{"schema", "mcmot-payoff-v1"}, {"shape", {3, 2}}, {"values", {1, -2, 0.5, 3, 2, 7}}}}},
               {{"label", "example-const"},
                {"marginals", mcmot::io::to_json(mcmot::synthetic::worked_example())},
                {"payoff", json{{"schema", "mcmot-payoff-v1"}, {"kind", "constant"}, {"value", 1.0}}}}}}};
  mcmot::io::write_json_file((dir / "batch.json").string(), batch);
  REQUIRE(run("ratio --batch " + (dir / "batch.json").string() + " -o " + (dir / "ratio.csv").string() +
              " --histogram " + (dir / "ratio_hist").string()) == 0);
  std::istringstream csv(slurp(dir / "ratio.csv"));
  std::string line;
  std::getline(csv, line);
  int rows = 0;
  while (std::getline(csv, line)) {
    auto last = line.find_last_of(',');
    auto prev = line.find_last_of(',', last - 1);
    CHECK(std::stod(line.substr(prev + 1, last - prev - 1)) == doctest::Approx(1.0).epsilon(1e-9));
    ++rows;
  }
  CHECK(rows == 3);
  CHECK(fs::exists(dir / "ratio_hist.svg"));
}

TEST_CASE("calibrate then bound") {
  auto dir = work_dir();
  std::mt19937_64 rng(12);
  auto x = mcmot::synthetic::random_chain(rng);
  mcmot::synthetic::ChainShape ys;
  ys.spot = 40;
  auto y = mcmot::synthetic::random_chain(rng, ys);
  mcmot::io::write_option_chain(x.slices, (dir / "x.csv").string(), (dir / "x.json").string());
  mcmot::io::write_option_chain(y.slices, (dir / "y.csv").string(), (dir / "y.json").string());
  REQUIRE(run("calibrate --chain " + (dir / "x.csv").string() + " --sidecar " + (dir / "x.json").string() +
              " --chain " + (dir / "y.csv").string() + " --sidecar " + (dir / "y.json").string() + " -o " +
              (dir / "calib.json").string() + " --marginals-out " + (dir / "calibrated.json").string()) == 0);
  auto doc = mcmot::io::read_json_file((dir / "calib.json").string());
  CHECK(doc["results"][0]["all_quotes_feasible"] == true);
  CHECK(doc["results"][1]["all_quotes_feasible"] == true);
  CHECK(run("validate --marginals " + (dir / "calibrated.json").string()) == 0);
  CHECK(run("bound --method mot --payoff basket:70 --marginals " + (dir / "calibrated.json").string() + " -o " +
            (dir / "cb.json").string() + " --export-lp " + (dir / "cb.mps").string()) == 0);
  CHECK(slurp(dir / "cb.min.mps").find("ENDATA") != std::string::npos);
}

TEST_CASE("failures map to exit codes") {
  auto dir = work_dir();
  {
    std::ofstream f(dir / "broken.json");
    f << "{\"schema\": \"mcmot-marginals-v1\", \"assets\": [";
  }
  CHECK(run("validate --marginals " + (dir / "broken.json").string()) == 3);
  auto bad = mcmot::io::to_json(mcmot::synthetic::worked_example());
  bad["assets"][0]["laws"][1]["points"] = {9.5, 10, 10.5};  // breaks convex order
  mcmot::io::write_json_file((dir / "bad.json").string(), bad);
  CHECK(run("validate --marginals " + (dir / "bad.json").string()) == 2);
  CHECK(run("bound --marginals " + (dir / "bad.json").string()) == 2);
  CHECK(run("bound --marginals " + kFixture + " --payoff nonsense") == 2);
  CHECK(run("bound --marginals " + kFixture + " --method simplex") == 2);
  CHECK(run("ratio") == 2);
}
