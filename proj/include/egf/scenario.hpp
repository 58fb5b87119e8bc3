#pragma once

// Scenario runner behind egf-lab: validates a JSON configuration, dispatches
// to the computational modules, and writes CSV tables plus a JSON report.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace egf {

inline constexpr const char* kLabVersion = "1.0.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitValidation = 2,
  kExitNumerical = 3,
  kExitResonance = 4,
};

/// Reads and parses a configuration file. Parse failures are ValidationErrors.
nlohmann::json load_config(const std::filesystem::path& path);

/// --out, then EGF_LAB_OUT, then output.dir in the config, then "egf_out".
std::filesystem::path resolve_output_dir(const std::optional<std::filesystem::path>& cli_out,
                                         const nlohmann::json& config);

struct RunOptions {
  std::filesystem::path out_dir = "egf_out";
  std::filesystem::path base_dir = ".";  // relative input paths in the config resolve here
  bool quiet = true;
  bool write_report = true;
};

struct RunResult {
  int exit_code = kExitOk;
  nlohmann::json report;  // always populated, including on failure
  std::vector<std::filesystem::path> files;
};

/// Runs one scenario. Never throws for configuration or numerical failures;
/// they are mapped to exit codes and described in report["error"].
RunResult run_scenario(const nlohmann::json& config, const RunOptions& opts);

enum class SweepAxis { ds, cfl };

struct SweepRow {
  double ds = 0.0;
  double cfl = 0.0;
  int nodes = 0;
  double error = 0.0;
  bool stable = true;
  std::string status;
};

struct SweepResult {
  int exit_code = kExitOk;
  std::vector<SweepRow> rows;
  std::optional<double> fitted_order;        // ds sweeps with >= 2 rows
  std::optional<double> largest_stable_cfl;  // cfl sweeps
  nlohmann::json report;
};

/// ds: nodes doubled per point from the base config. cfl: points values
/// spread over [0.25, 2] at fixed grid. Points run concurrently.
SweepResult run_sweep(const nlohmann::json& config, SweepAxis axis, int points, const RunOptions& opts);

/// Least-squares slope of log(error) against log(ds).
double fit_order(const std::vector<double>& ds, const std::vector<double>& errors);

nlohmann::json classification_json(int n, double tau1, double r);

}  // namespace egf
