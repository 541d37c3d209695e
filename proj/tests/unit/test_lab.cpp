#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dinilab/errors.hpp"
#include "dinilab/lab.hpp"

using namespace dinilab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / "dinilab_lab_test" / name;
  fs::remove_all(d);
  return d;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  FAIL("missing column " << name);
  return 0;
}

}  // namespace

TEST_SUITE("lab") {

TEST_CASE("plateau verdict") {
  const auto flat = plateau_verdict({1.0, 1.5, 1.52});
  CHECK(flat.metric == doctest::Approx(0.02 / 1.5));
  CHECK(flat.first_increment == doctest::Approx(0.5));
  CHECK(flat.verdict == "Plateau");
  CHECK(plateau_verdict({1.0, 2.0, 3.0}).verdict == "Propagating");
  CHECK(plateau_verdict({1.0, 1.1}).verdict == "Inconclusive");
  const auto one = plateau_verdict({1.0});
  CHECK(std::isnan(one.metric));
  CHECK(one.verdict == "Inconclusive");
  CHECK(plateau_verdict({1.0, 1.1}, PlateauThresholds{0.2, 0.5}).verdict == "Plateau");
}

TEST_CASE("K schedules") {
  CHECK(k_schedule_from_json(json::parse("[1, 10, 100]")) == std::vector<double>{1, 10, 100});
  const auto g = k_schedule_from_json(json::parse(R"({"rule":"geometric","base":10,"j_min":1,"j_max":3})"));
  REQUIRE(g.size() == 3);
  CHECK(g[2] == doctest::Approx(1000.0));
  CHECK_THROWS_AS(k_schedule_from_json(json::parse("[10, 1]")), ConfigError);
  CHECK_THROWS_AS(k_schedule_from_json(json::parse("[]")), ConfigError);
  CHECK_THROWS_AS(k_schedule_from_json(json::parse(R"({"rule":"linear"})")), ConfigError);
  CHECK_THROWS_AS(k_schedule_from_json(json::parse(R"({"rule":"geometric","base":10,"j_min":3,"j_max":1})")),
                  ConfigError);
}

TEST_CASE("scenario names and mismatches") {
  for (auto s : {Scenario::dini_check, Scenario::kernel_check, Scenario::solve, Scenario::propagation,
                 Scenario::uniqueness, Scenario::energy_audit, Scenario::cascade})
    CHECK(scenario_from_string(to_string(s)) == s);
  CHECK(to_string(Scenario::energy_audit) == "energy");
  CHECK_THROWS_AS(scenario_from_string("nope"), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"scenario", "dini"}}, Scenario::cascade), ConfigError);
  CHECK_NOTHROW(config_from_json(json::object(), Scenario::cascade));
  CHECK_THROWS_AS(load_config("/nonexistent/config.json", Scenario::dini_check), ConfigError);
}

TEST_CASE("dini run writes the family matrix") {
  const auto dir = scratch("dini");
  const auto rep = run_dini(config_from_json(json::object(), Scenario::dini_check), dir.string());
  CHECK(rep.exit_code == 0);
  const auto rows = read_csv(dir / "dini.csv");
  REQUIRE(rows.size() == 9);
  const auto vc = column(rows[0], "verdict");
  int conv = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) conv += rows[i][vc] == "converges";
  CHECK(conv == 5);
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(fs::exists(dir / "dini.gp"));

  // an exhausted shell budget is reported, not thrown
  const auto d2 = scratch("dini_indeterminate");
  const auto r2 = run_dini(config_from_json(json::parse(R"({"omegas":[{"family":"inverse_log","params":{"eps":0.5}}],
                                                            "max_shells":16})"),
                                            Scenario::dini_check),
                           d2.string());
  CHECK(r2.exit_code == 4);
  CHECK(read_csv(d2 / "dini.csv")[1][1] == "inverse_log");
}

TEST_CASE("cascade run reports the verdicts") {
  const auto dir = scratch("cascade");
  run_cascade(config_from_json(json::object(), Scenario::cascade), dir.string());
  const auto rows = read_csv(dir / "cascade_verdict.csv");
  const auto vc = column(rows[0], "verdict");
  int reaches = 0, bounded = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    reaches += rows[i][vc] == "ReachesDistance";
    bounded += rows[i][vc] == "Bounded";
  }
  CHECK(reaches == 6);  // two omegas x three scalings
  CHECK(bounded == 3);
  CHECK(fs::exists(dir / "schedule_phi.csv"));
}

TEST_CASE("propagation with zero data stays zero") {
  const auto dir = scratch("prop0");
  const auto cfg = json::parse(R"({"resolution":[16,16],"K_schedule":[0]})");
  const auto rep = run_propagation(config_from_json(cfg, Scenario::propagation), dir.string());
  CHECK(rep.exit_code == 0);
  const auto rows = read_csv(dir / "probes.csv");
  const auto vc = column(rows[0], "value");
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][vc]) == 0.0);
  const auto v = read_csv(dir / "propagation_verdict.csv");
  CHECK(v[1][column(v[0], "verdict")] == "Inconclusive");
}

TEST_CASE("solve without probes writes no probe file") {
  const auto dir = scratch("solve");
  const auto cfg = json::parse(R"({"problem":{"N":1,"p":2,"box":{"lo":[0],"hi":[1]},
                                   "potential":{"geometry":"constant","a":1},
                                   "boundary":{"kind":"constant","level":2}},
                                   "resolution":[32],"write_field":false})");
  const auto rep = run_solve(config_from_json(cfg, Scenario::solve), dir.string());
  CHECK(rep.exit_code == 0);
  CHECK(fs::exists(dir / "solve.csv"));
  CHECK(!fs::exists(dir / "probes.csv"));
  CHECK(!fs::exists(dir / "field.bin"));
  CHECK_THROWS_AS(run_solve(config_from_json(json::object(), Scenario::solve), scratch("solve2").string()), ConfigError);
}

TEST_CASE("uniqueness gap vanishes without absorption") {
  const auto dir = scratch("uniq");
  const auto cfg = json::parse(R"({"problem":{"potential":{"geometry":"constant","a":0,"omega":null}},
                                   "resolution":[16,16],"K_schedule":[5],"shrink":[0],"K_big":5})");
  run_uniqueness(config_from_json(cfg, Scenario::uniqueness), dir.string());
  const auto rows = read_csv(dir / "uniqueness_gap.csv");
  REQUIRE(rows.size() == 2);
  CHECK(std::stod(rows[1][column(rows[0], "gap")]) <= 1e-9);
  CHECK(rows[1][column(rows[0], "violations")] == "0");

  const auto bad = json::parse(R"({"K_schedule":[5, 50],"shrink":[0]})");
  CHECK_THROWS_AS(run_uniqueness(config_from_json(bad, Scenario::uniqueness), scratch("uniq2").string()), ConfigError);
}

}  // TEST_SUITE
