#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "drmech/report.hpp"
#include "drmech/runner.hpp"
#include "drmech/scenario_io.hpp"

using namespace drmech;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Drops the trailing wall_time_s field from every data row.
std::string strip_wall_time(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    size_t cut = line.rfind(',');
    out << line.substr(0, cut) << "\n";
  }
  return out.str();
}

fs::path write_small_scenario(const fs::path& dir) {
  fs::create_directories(dir);
  fs::path p = dir / "small.scenario";
  std::ofstream out(p);
  out << R"({
    "n_slots": 3,
    "baseline_mwh": [9000, 4000, 7500],
    "flat_rate": 110.0,
    "cost": {"breakpoints_mwh": [6000, 8000], "marginal_rates": [10.0, 40.0, 90.0]},
    "discomfort": {"family": "exponential", "mu": 0.5, "scale": 110.0, "exponent": 1.0}
  })";
  return p;
}

}  // namespace

TEST_CASE("the shipped scenario file loads and validates") {
  Scenario s = load_scenario(std::string(DRMECH_DATA_DIR) + "/ontario24.scenario");
  CHECK(s.n_slots == 24);
  CHECK(s.flat_rate == 110.0);
  CHECK(s.cost_at(0).breakpoints() == std::vector<double>{16300.0, 17900.0});
  CHECK(s.cost_at(5).marginal_rates() == std::vector<double>{10.0, 72.46, 91.0});
  CHECK(s.discomfort.at(3).family == DiscomfortFamily::Exponential);
  CHECK(s.base_fractions.rows() == 24);
  double peak = 0.0;
  for (double e : s.baseline) peak = std::max(peak, e);
  CHECK(peak > 17900.0);  // the evening peak reaches the third cost segment
}

TEST_CASE("scenario parse errors carry the file context and field name") {
  CHECK_THROWS_WITH_AS(parse_scenario_json(R"({"n_slots": 2})", "bad.scenario"),
                       doctest::Contains("missing field 'baseline_mwh'"), ValidationError);
  CHECK_THROWS_WITH_AS(
      parse_scenario_json(
          R"({"n_slots": 2, "baseline_mwh": [1, 2],
              "cost": {"breakpoints_mwh": [], "marginal_rates": [10.0]},
              "discomfort": {"family": "exponential", "mu": 1.0}})",
          "bad.scenario"),
      doctest::Contains("missing field 'flat_rate'"), ValidationError);
  CHECK_THROWS_WITH_AS(
      parse_scenario_json(
          R"({"n_slots": 2, "baseline_mwh": [1, 2], "flat_rate": 110.0,
              "cost": {"breakpoints_mwh": [], "marginal_rates": [10.0]},
              "discomfort": {"family": "exponential", "mu": -1.0}})",
          "bad.scenario"),
      doctest::Contains("mu must be positive"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_scenario_json("{ nope", "bad.scenario"),
                       doctest::Contains("bad.scenario"), ValidationError);
}

TEST_CASE("flexibility override applies to exponential scenarios only") {
  Scenario s = load_scenario(std::string(DRMECH_DATA_DIR) + "/ontario24.scenario");
  Scenario swept = with_flexibility(s, 1.0);
  CHECK(swept.discomfort.at(0).mu == 1.0);
  s.discomfort = DiscomfortModel::uniform(110.0);
  CHECK_THROWS_AS(with_flexibility(s, 1.0), ValidationError);
}

TEST_CASE("format_double round-trips through parsing") {
  for (double v : {0.0, 1.0 / 3.0, 448036.125, 1e-9, 123456789.0, 0.1}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("run writes a consistent, reproducible results.csv and figures") {
  fs::path dir = fs::temp_directory_path() / "drmech_test_run";
  fs::remove_all(dir);
  fs::path scenario = write_small_scenario(dir);

  RunManifest m;
  m.scenario_path = scenario.string();
  m.mechanisms = {"base", "robust", "dictatorial"};
  m.options.starts = 6;
  m.options.max_iters = 300;
  m.mu_values = {1.0 / 3.0, 1.0};
  m.seed = 99;
  m.users = 2000;
  m.out_dir = (dir / "out1").string();
  REQUIRE(run(m) == 0);

  auto rows = read_results_csv((dir / "out1" / "results.csv").string());
  REQUIRE(rows.size() == 6);  // 3 mechanisms x 2 flexibility values
  for (const ResultRow& r : rows) {
    CHECK(r.total_cost ==
          doctest::Approx(r.production_cost + r.discounts_paid).epsilon(1e-6));
    CHECK(r.savings_fraction <= r.dictatorial_savings_fraction + 1e-9);
    CHECK(r.seed == 99);
  }
  // savings_fraction = 1 - total / baseline, with the baseline recovered from
  // any row of the same flexibility value.
  for (const ResultRow& r : rows) {
    if (r.savings_fraction >= 1.0) continue;
    double baseline = r.total_cost / (1.0 - r.savings_fraction);
    CHECK(1.0 - r.total_cost / baseline == doctest::Approx(r.savings_fraction));
  }

  CHECK(read_file(dir / "out1" / "savings.svg").find("<svg") != std::string::npos);
  CHECK(read_file(dir / "out1" / "components.svg").find("<svg") != std::string::npos);
  CHECK(fs::exists(dir / "out1" / "simulation.csv"));

  // Same manifest, fresh output directory: byte-identical rows modulo timing.
  m.out_dir = (dir / "out2").string();
  REQUIRE(run(m) == 0);
  CHECK(strip_wall_time(read_file(dir / "out1" / "results.csv")) ==
        strip_wall_time(read_file(dir / "out2" / "results.csv")));

  fs::remove_all(dir);
}

TEST_CASE("run rejects bad manifests") {
  fs::path dir = fs::temp_directory_path() / "drmech_test_badrun";
  fs::remove_all(dir);
  fs::path scenario = write_small_scenario(dir);

  RunManifest empty;
  empty.scenario_path = scenario.string();
  empty.mechanisms = {};
  empty.out_dir = (dir / "out").string();
  CHECK(run(empty) != 0);

  RunManifest unknown = empty;
  unknown.mechanisms = {"base", "psychic"};
  CHECK(run(unknown) != 0);

  RunManifest bad_mu = empty;
  bad_mu.mechanisms = {"base"};
  bad_mu.mu_values = {-0.5};
  CHECK(run(bad_mu) != 0);

  RunManifest missing = empty;
  missing.mechanisms = {"base"};
  missing.scenario_path = (dir / "nope.scenario").string();
  CHECK(run(missing) != 0);

  fs::remove_all(dir);
}
