// egf-lab: runs extrinsic geometric flow scenarios from JSON configs.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "egf/errors.hpp"
#include "egf/scenario.hpp"

namespace {

int run_file(const std::string& path, const std::optional<std::string>& out, bool quiet,
             const char* required_scenario = nullptr) {
  nlohmann::json config;
  try {
    config = egf::load_config(path);
  } catch (const egf::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return egf::kExitValidation;
  }
  if (required_scenario) {
    if (!config.is_object()) {
      std::cerr << "error: config: top level must be a JSON object\n";
      return egf::kExitValidation;
    }
    if (!config.contains("scenario")) config["scenario"] = required_scenario;
    if (config["scenario"] != required_scenario) {
      std::cerr << "error: config: scenario: this subcommand runs \"" << required_scenario << "\" configs\n";
      return egf::kExitValidation;
    }
  }
  egf::RunOptions opts;
  opts.out_dir = egf::resolve_output_dir(out ? std::optional<std::filesystem::path>(*out) : std::nullopt, config);
  opts.base_dir = std::filesystem::path(path).parent_path();
  if (opts.base_dir.empty()) opts.base_dir = ".";
  opts.quiet = quiet;
  return egf::run_scenario(config, opts).exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"egf-lab: extrinsic geometric flows, solitons and their numerical checks"};
  app.set_version_flag("--version", std::string(egf::kLabVersion));
  app.require_subcommand(1);

  std::string run_config;
  std::optional<std::string> run_out;
  bool run_quiet = false;
  auto* run = app.add_subcommand("run", "Run one scenario config");
  run->add_option("config", run_config, "Scenario config (JSON)")->required();
  run->add_option("--out", run_out, "Output directory (overrides EGF_LAB_OUT and output.dir)");
  run->add_flag("--quiet", run_quiet, "Print nothing on success");

  std::string sweep_config, sweep_axis = "ds";
  std::optional<std::string> sweep_out;
  int sweep_points = 4;
  bool sweep_quiet = false;
  auto* sweep = app.add_subcommand("sweep", "Refinement or CFL sweep of one config");
  sweep->add_option("config", sweep_config, "Base scenario config (JSON)")->required();
  sweep->add_option("--axis", sweep_axis, "Sweep axis")->check(CLI::IsMember({"ds", "cfl"}));
  sweep->add_option("--points", sweep_points, "Number of sweep points")->check(CLI::Range(1, 12));
  sweep->add_option("--out", sweep_out, "Output directory");
  sweep->add_flag("--quiet", sweep_quiet, "Print nothing on success");

  int cls_n = 0;
  double cls_tau1 = 0.0, cls_r = 0.0;
  auto* classify = app.add_subcommand("classify", "Extrinsic Ricci soliton spectra for (n, tau1, r)");
  classify->add_option("--n", cls_n, "Leaf dimension (>= 3)")->required();
  classify->add_option("--tau1", cls_tau1, "Mean curvature tau1")->required();
  classify->add_option("--r", cls_r, "Soliton constant r")->required();

  std::string coh_config;
  std::optional<std::string> coh_out;
  bool coh_quiet = false;
  auto* coh = app.add_subcommand("cohomology", "Solve a torus cohomological equation config");
  coh->add_option("config", coh_config, "Cohomology config (JSON)")->required();
  coh->add_option("--out", coh_out, "Output directory");
  coh->add_flag("--quiet", coh_quiet, "Print nothing on success");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : egf::kExitValidation;
  }

  if (*run) return run_file(run_config, run_out, run_quiet);
  if (*coh) return run_file(coh_config, coh_out, coh_quiet, "cohomology");
  if (*classify) {
    try {
      std::cout << egf::classification_json(cls_n, cls_tau1, cls_r).dump(2) << '\n';
      return egf::kExitOk;
    } catch (const egf::ValidationError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return egf::kExitValidation;
    }
  }
  if (*sweep) {
    nlohmann::json config;
    try {
      config = egf::load_config(sweep_config);
    } catch (const egf::ValidationError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return egf::kExitValidation;
    }
    egf::RunOptions opts;
    opts.out_dir =
        egf::resolve_output_dir(sweep_out ? std::optional<std::filesystem::path>(*sweep_out) : std::nullopt, config);
    opts.base_dir = std::filesystem::path(sweep_config).parent_path();
    if (opts.base_dir.empty()) opts.base_dir = ".";
    opts.quiet = sweep_quiet;
    const auto axis = sweep_axis == "cfl" ? egf::SweepAxis::cfl : egf::SweepAxis::ds;
    return egf::run_sweep(config, axis, sweep_points, opts).exit_code;
  }
  return egf::kExitInternal;
}
