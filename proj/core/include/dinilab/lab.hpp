#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dinilab/solver.hpp"

namespace dinilab {

enum class Scenario { dini_check, kernel_check, solve, propagation, uniqueness, energy_audit, cascade };

std::string to_string(Scenario s);
/// Accepts the CLI subcommand names (dini, kernel, solve, propagation, uniqueness, energy, cascade).
Scenario scenario_from_string(const std::string& s);

struct ExperimentConfig {
  Scenario scenario = Scenario::dini_check;
  nlohmann::json body;  // the whole document
};

/// Parses a config file. A "scenario" key, when present, must name the expected scenario.
/// Every schema problem is a ConfigError.
ExperimentConfig load_config(const std::string& path, Scenario expected);
ExperimentConfig config_from_json(const nlohmann::json& j, Scenario expected);

/// K schedule: a list of levels, or {"rule": "geometric", "base": b, "j_min": i, "j_max": k}.
std::vector<double> k_schedule_from_json(const nlohmann::json& j);

struct LabProbe {
  std::string id;
  std::vector<double> x;
};
std::vector<LabProbe> probes_from_json(const nlohmann::json& j, int N);

/// Outcome of one run. Files are relative to the output directory, in write order.
struct RunReport {
  std::vector<std::string> files;
  std::vector<std::string> verdicts;  // one line per verdict row, for the console
  /// 0 ok, 4 when some classification was indeterminate (rows are still written)
  int exit_code = 0;
};

RunReport run_dini(const ExperimentConfig& cfg, const std::string& out_dir);
RunReport run_kernel(const ExperimentConfig& cfg, const std::string& out_dir);
RunReport run_solve(const ExperimentConfig& cfg, const std::string& out_dir);
RunReport run_propagation(const ExperimentConfig& cfg, const std::string& out_dir);
RunReport run_uniqueness(const ExperimentConfig& cfg, const std::string& out_dir);
RunReport run_energy_audit(const ExperimentConfig& cfg, const std::string& out_dir);
RunReport run_cascade(const ExperimentConfig& cfg, const std::string& out_dir);

RunReport run_scenario(const ExperimentConfig& cfg, const std::string& out_dir);

/// Three-way plateau verdict on the last relative increment of a probe trace.
struct PlateauThresholds {
  double plateau = 0.05;      // below: Plateau
  double propagating = 0.25;  // at or above: Propagating
};

struct PlateauVerdict {
  double metric = 0.0;           // last-step relative increment
  double first_increment = 0.0;  // first-step relative increment
  std::string verdict;           // Plateau | Propagating | Inconclusive
};

/// trace: probe values over an increasing K schedule (>= 2 entries).
PlateauVerdict plateau_verdict(const std::vector<double>& trace, const PlateauThresholds& t = {});

}  // namespace dinilab
