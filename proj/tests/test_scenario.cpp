#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "egf/csv.hpp"
#include "egf/errors.hpp"
#include "egf/scenario.hpp"

using namespace egf;
using json = nlohmann::json;
namespace fs = std::filesystem;
using doctest::Approx;

namespace {

const fs::path kConfigs = EGF_CONFIG_DIR;
const fs::path kData = EGF_TEST_DATA_DIR;

// Fresh directory per call, removed at scope exit.
struct Scratch {
  fs::path dir;
  Scratch() {
    static int counter = 0;
    dir = fs::temp_directory_path() / ("egf_scn_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(dir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunResult run(const json& config, const fs::path& out, const fs::path& base = kConfigs) {
  RunOptions opts;
  opts.out_dir = out;
  opts.base_dir = base;
  return run_scenario(config, opts);
}

json small_wave() {
  return json::parse(R"({
    "scenario": "umbilical-flow",
    "functional": {"name": "b1", "n": 1},
    "geometry": {"length": 6.283185307179586},
    "initial": {"kind": "sine"},
    "numerics": {"nodes": 64, "cfl": 0.5, "t_end": 1.0}
  })");
}

std::string error_message(const RunResult& r) { return r.report["error"]["message"].get<std::string>(); }

}  // namespace

TEST_CASE("config validation maps to exit 2 with the field path") {
  Scratch s;
  SUBCASE("missing required field") {
    const auto r = run(load_config(kData / "missing_nodes.json"), s.dir);
    CHECK(r.exit_code == kExitValidation);
    CHECK(error_message(r) == "config: numerics.nodes: missing required field");
    CHECK(r.report["exit_status"] == kExitValidation);
    CHECK(fs::exists(s.dir / "report.json"));
  }
  SUBCASE("out-of-range and mistyped values") {
    auto c = small_wave();
    c["numerics"]["cfl"] = 1.5;
    auto r = run(c, s.dir);
    CHECK(r.exit_code == kExitValidation);
    CHECK(error_message(r).find("numerics.cfl") != std::string::npos);

    c = small_wave();
    c["numerics"]["nodes"] = "many";
    r = run(c, s.dir);
    CHECK(r.exit_code == kExitValidation);
    CHECK(error_message(r).find("numerics.nodes") != std::string::npos);

    c = small_wave();
    c["functional"]["name"] = "no_such_functional";
    CHECK(run(c, s.dir).exit_code == kExitValidation);
  }
  SUBCASE("unknown scenario and non-object config") {
    auto c = small_wave();
    c["scenario"] = "teleport";
    CHECK(run(c, s.dir).exit_code == kExitValidation);
    CHECK(run(json::array({1, 2}), s.dir).exit_code == kExitValidation);
  }
  SUBCASE("unreadable and malformed files") {
    CHECK_THROWS_AS(load_config(s.dir / "absent.json"), ValidationError);
    fs::create_directories(s.dir);
    std::ofstream(s.dir / "bad.json") << "{ \"scenario\": ";
    CHECK_THROWS_AS(load_config(s.dir / "bad.json"), ValidationError);
  }
}

TEST_CASE("numerical failures map to exit 3") {
  Scratch s;
  SUBCASE("supercritical blow-up") {
    auto c = small_wave();
    c["numerics"]["nodes"] = 512;
    c["numerics"]["t_end"] = 2.0;
    c["numerics"]["cfl"] = 1.8;
    c["numerics"]["allow_supercritical"] = true;
    const auto r = run(c, s.dir);
    CHECK(r.exit_code == kExitNumerical);
    CHECK(r.report.contains("error"));
  }
  SUBCASE("step budget exhausted") {
    auto c = small_wave();
    c["numerics"]["max_steps"] = 2;
    CHECK(run(c, s.dir).exit_code == kExitNumerical);
  }
}

TEST_CASE("resonant cohomology maps to exit 4 and names the mode") {
  Scratch s;
  const auto r = run(load_config(kConfigs / "cohomology_resonant.json"), s.dir);
  CHECK(r.exit_code == kExitResonance);
  const auto mode = r.report["error"]["worst_mode"].get<std::vector<int>>();
  const bool named = mode == std::vector<int>{1, -2} || mode == std::vector<int>{-1, 2};
  CHECK(named);
}

TEST_CASE("classification json") {
  const auto j = classification_json(4, 0.0, 1.0);
  auto roots = j["roots"].get<std::vector<double>>();
  std::sort(roots.begin(), roots.end());
  CHECK(roots == std::vector<double>{-1.0, 1.0});
  REQUIRE(j["spectra"].size() == 1);
  const auto& sp = j["spectra"][0];
  CHECK(sp["n1"] == 2);
  CHECK(sp["n2"] == 2);
  CHECK(j["cpc"] == true);
  CHECK(classification_json(4, 0.0, -1.0)["spectra"].empty());
  CHECK_THROWS_AS(classification_json(2, 0.0, 1.0), ValidationError);
}

TEST_CASE("output directory precedence") {
  const json with_dir = {{"output", {{"dir", "from_config"}}}};
  ::unsetenv("EGF_LAB_OUT");
  CHECK(resolve_output_dir(std::nullopt, json::object()) == fs::path("egf_out"));
  CHECK(resolve_output_dir(std::nullopt, with_dir) == fs::path("from_config"));
  ::setenv("EGF_LAB_OUT", "from_env", 1);
  CHECK(resolve_output_dir(std::nullopt, with_dir) == fs::path("from_env"));
  CHECK(resolve_output_dir(fs::path("from_cli"), with_dir) == fs::path("from_cli"));
  ::setenv("EGF_LAB_OUT", "", 1);
  CHECK(resolve_output_dir(std::nullopt, with_dir) == fs::path("from_config"));
  ::unsetenv("EGF_LAB_OUT");
}

TEST_CASE("repeated runs write identical CSV bytes") {
  for (const char* name : {"traveling_wave", "burgers_lax_friedrichs", "tau_cpc", "cohomology_golden", "revolution",
                           "normalized_ricci_wave", "biregular_exp"}) {
    CAPTURE(name);
    const auto config = load_config(kConfigs / (std::string(name) + ".json"));
    Scratch a, b;
    const auto ra = run(config, a.dir), rb = run(config, b.dir);
    REQUIRE(ra.exit_code == kExitOk);
    REQUIRE(rb.exit_code == kExitOk);
    REQUIRE(ra.files.size() == rb.files.size());
    for (std::size_t i = 0; i < ra.files.size(); ++i) {
      if (ra.files[i].extension() != ".csv") continue;
      CHECK(ra.files[i].filename() == rb.files[i].filename());
      const auto bytes = slurp(ra.files[i]);
      CHECK(!bytes.empty());
      CHECK(bytes == slurp(rb.files[i]));
      CHECK(bytes.find('\r') == std::string::npos);
    }
  }
}

TEST_CASE("report echoes the config and lists its files") {
  Scratch s;
  const auto config = load_config(kConfigs / "traveling_wave.json");
  const auto r = run(config, s.dir);
  REQUIRE(r.exit_code == kExitOk);
  const auto on_disk = json::parse(slurp(s.dir / "report.json"));
  CHECK(on_disk["config"] == config);
  CHECK(on_disk["scenario"] == "umbilical-flow");
  CHECK(on_disk["exit_status"] == 0);
  CHECK(on_disk["versions"]["egf_lab"] == kLabVersion);
  CHECK(on_disk["files"] == json::array({"snapshots.csv"}));
  CHECK(on_disk["results"]["oracle"]["available"] == true);
  CHECK(on_disk["results"]["oracle"]["sup_error"].get<double>() <= 0.05);

  SUBCASE("snapshot table layout") {
    std::istringstream csv(slurp(s.dir / "snapshots.csv"));
    std::string header;
    std::getline(csv, header);
    CHECK(header == "t,s,lambda,phi");
  }
}

TEST_CASE("grid input resolves relative to the base directory") {
  Scratch s;
  const auto r = run(load_config(kData / "cohomology_grid.json"), s.dir, kData);
  CHECK(r.exit_code == kExitOk);
  CHECK(r.report["results"]["residual"].get<double>() <= 1e-10);
  CHECK(run(load_config(kData / "cohomology_grid.json"), s.dir, s.dir).exit_code == kExitValidation);
}

TEST_CASE("csv number formatting round-trips") {
  for (double v : {0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0}) CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("fit_order") {
  CHECK(fit_order({0.1, 0.05, 0.025}, {0.2, 0.1, 0.05}) == Approx(1.0));
  CHECK(fit_order({0.1, 0.05, 0.025}, {0.04, 0.01, 0.0025}) == Approx(2.0));
  CHECK_THROWS_AS(fit_order({0.1}, {0.1}), ValidationError);
  CHECK_THROWS_AS(fit_order({0.1, 0.05}, {0.1}), ValidationError);
}

TEST_CASE("sweeps") {
  Scratch s;
  RunOptions opts;
  opts.out_dir = s.dir;
  opts.base_dir = kConfigs;
  const auto wave = load_config(kConfigs / "traveling_wave.json");
  SUBCASE("ds refinement recovers first order for upwind") {
    auto c = wave;
    c["numerics"]["nodes"] = 128;
    const auto r = run_sweep(c, SweepAxis::ds, 4, opts);
    CHECK(r.exit_code == kExitOk);
    REQUIRE(r.rows.size() == 4);
    for (std::size_t i = 1; i < r.rows.size(); ++i) {
      CHECK(r.rows[i].nodes == 2 * r.rows[i - 1].nodes);
      CHECK(r.rows[i].error < r.rows[i - 1].error);
    }
    REQUIRE(r.fitted_order.has_value());
    CHECK(*r.fitted_order >= 0.9);
    CHECK(*r.fitted_order <= 1.1);
    CHECK(fs::exists(s.dir / "sweep.csv"));
    CHECK(fs::exists(s.dir / "sweep_report.json"));
  }
  SUBCASE("cone refinement keeps the endpoints") {
    const auto r = run_sweep(load_config(kConfigs / "cone_check.json"), SweepAxis::ds, 2, opts);
    CHECK(r.exit_code == kExitOk);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[1].nodes == 2 * r.rows[0].nodes - 1);
    CHECK(r.rows[0].error <= 5e-3);
  }
  SUBCASE("a single point has no fit") {
    const auto r = run_sweep(wave, SweepAxis::ds, 1, opts);
    CHECK(r.exit_code == kExitOk);
    CHECK(r.rows.size() == 1);
    CHECK_FALSE(r.fitted_order.has_value());
  }
  SUBCASE("cfl scan finds the stability edge") {
    const auto r = run_sweep(wave, SweepAxis::cfl, 8, opts);
    CHECK(r.exit_code == kExitOk);
    REQUIRE(r.rows.size() == 8);
    CHECK(r.rows.front().cfl == Approx(0.25));
    CHECK(r.rows.back().cfl == Approx(2.0));
    CHECK(r.rows.front().stable);
    CHECK_FALSE(r.rows.back().stable);
    REQUIRE(r.largest_stable_cfl.has_value());
    CHECK(*r.largest_stable_cfl >= 1.0);
    CHECK(*r.largest_stable_cfl < 2.0);
  }
  SUBCASE("unsupported scenarios and bad point counts are rejected") {
    CHECK(run_sweep(load_config(kConfigs / "revolution.json"), SweepAxis::ds, 2, opts).exit_code == kExitValidation);
    CHECK(run_sweep(wave, SweepAxis::ds, 0, opts).exit_code == kExitValidation);
  }
  SUBCASE("sweeps are deterministic") {
    Scratch other;
    RunOptions o2 = opts;
    o2.out_dir = other.dir;
    run_sweep(wave, SweepAxis::ds, 2, opts);
    run_sweep(wave, SweepAxis::ds, 2, o2);
    CHECK(slurp(s.dir / "sweep.csv") == slurp(other.dir / "sweep.csv"));
  }
}
