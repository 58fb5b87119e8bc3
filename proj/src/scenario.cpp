#include "egf/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include "egf/cohomology.hpp"
#include "egf/csv.hpp"
#include "egf/errors.hpp"
#include "egf/flow_engine.hpp"
#include "egf/functionals.hpp"
#include "egf/revolution.hpp"
#include "egf/soliton_lab.hpp"

namespace egf {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

// A view of one JSON object that knows its dotted path for error messages.
class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ValidationError("config: " + at(key) + ": " + msg);
  }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key) && !(*j_)[key].is_null(); }

  const json& raw(const std::string& key) const {
    if (!has(key)) fail(key, "missing required field");
    return (*j_)[key];
  }

  Node child(const std::string& key) const {
    const json& c = raw(key);
    if (!c.is_object()) fail(key, "must be an object");
    return Node(c, at(key));
  }

  Node child_or_empty(const std::string& key) const {
    static const json empty = json::object();
    if (!has(key)) return Node(empty, at(key));
    return child(key);
  }

  double number(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number()) fail(key, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "must be finite");
    return d;
  }
  double number(const std::string& key, double def) const { return has(key) ? number(key) : def; }

  long integer(const std::string& key) const {
    const json& v = raw(key);
    if (v.is_number_integer()) return v.get<long>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 1e15) return static_cast<long>(d);
    }
    fail(key, "must be an integer");
  }
  long integer(const std::string& key, long def) const { return has(key) ? integer(key) : def; }

  std::string string(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& def) const { return has(key) ? string(key) : def; }

  bool flag(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const json& v = raw(key);
    if (!v.is_boolean()) fail(key, "must be true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array()) fail(key, "must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(key, "must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<int> integers(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array()) fail(key, "must be an array of integers");
    std::vector<int> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) fail(key, "must be an array of integers");
      out.push_back(e.get<int>());
    }
    return out;
  }

  const json& self() const { return *j_; }
  const std::string& path() const { return path_; }

 private:
  const json* j_;
  std::string path_;
};

struct Context {
  fs::path out_dir;
  fs::path base_dir;
  bool write_files = true;
  std::vector<fs::path> files;

  std::unique_ptr<CsvWriter> csv(const std::string& name, const std::vector<std::string>& header) {
    if (!write_files) return nullptr;
    fs::create_directories(out_dir);
    files.push_back(out_dir / name);
    return std::make_unique<CsvWriter>(out_dir / name, header);
  }
};

// ---------------------------------------------------------------------------
// Common blocks

FlowFunctional functional_from(const Node& root) {
  const Node f = root.child("functional");
  const std::string name = f.string("name");
  const long n = f.integer("n");
  if (n < 1 || n > 64) f.fail("n", "must be in [1, 64]");
  std::map<std::string, double> params;
  const Node p = f.child_or_empty("params");
  for (const auto& [key, value] : p.self().items()) params[key] = p.number(key);
  return make_functional(name, static_cast<int>(n), params);
}

CurveGrid grid_from(const Node& root) {
  const Node g = root.child("geometry");
  const Node num = root.child("numerics");
  CurveGrid grid;
  grid.origin = g.number("origin", 0.0);
  grid.length = g.number("length");
  if (!(grid.length > 0.0)) g.fail("length", "must be positive");
  const std::string b = g.string("boundary", "periodic");
  if (b == "periodic") {
    grid.boundary = Boundary::periodic;
  } else if (b == "transmissive") {
    grid.boundary = Boundary::transmissive;
  } else {
    g.fail("boundary", "must be \"periodic\" or \"transmissive\"");
  }
  const long nodes = num.integer("nodes");
  if (nodes < 8 || nodes > 1'000'000) num.fail("nodes", "must be in [8, 1000000]");
  grid.nodes = static_cast<int>(nodes);
  return grid;
}

StepControl control_from(const Node& root) {
  const Node num = root.child("numerics");
  StepControl ctl;
  ctl.cfl = num.number("cfl", 0.5);
  ctl.allow_supercritical = num.flag("allow_supercritical", false);
  const double cfl_max = ctl.allow_supercritical ? 4.0 : 1.0;
  if (!(ctl.cfl > 0.0 && ctl.cfl <= cfl_max)) num.fail("cfl", ctl.allow_supercritical ? "must be in (0, 4]" : "must be in (0, 1]");
  const std::string scheme = num.string("scheme", "upwind");
  if (scheme == "upwind") {
    ctl.scheme = Scheme::upwind;
  } else if (scheme == "lax_friedrichs") {
    ctl.scheme = Scheme::lax_friedrichs;
  } else {
    num.fail("scheme", "must be \"upwind\" or \"lax_friedrichs\"");
  }
  const std::string integ = num.string("integrator", "euler");
  if (integ == "euler") {
    ctl.integrator = Integrator::euler;
  } else if (integ == "heun") {
    ctl.integrator = Integrator::heun;
  } else {
    num.fail("integrator", "must be \"euler\" or \"heun\"");
  }
  ctl.t_end = num.number("t_end");
  if (ctl.t_end < 0.0) num.fail("t_end", "must be >= 0");
  ctl.max_steps = num.integer("max_steps", 1'000'000);
  if (ctl.max_steps < 1) num.fail("max_steps", "must be >= 1");
  return ctl;
}

std::function<double(double)> initial_from(const Node& root, const CurveGrid& grid) {
  const Node in = root.child("initial");
  const std::string kind = in.string("kind");
  if (kind == "constant") {
    const double c = in.number("value");
    return [c](double) { return c; };
  }
  if (kind == "sine") {
    const double a = in.number("amplitude", 1.0), k = in.number("wavenumber", 1.0);
    const double off = in.number("offset", 0.0), ph = in.number("phase", 0.0);
    const double o = grid.origin, L = grid.length;
    return [=](double s) { return off + a * std::sin(2 * kPi * k * (s - o) / L + ph); };
  }
  if (kind == "cone") {
    const double scale = in.number("scale", -2.0);
    if (!(grid.origin > 0.0)) root.child("geometry").fail("origin", "cone data -2/x0 needs origin > 0");
    return [scale](double s) { return scale / s; };
  }
  if (kind == "gaussian") {
    const double a = in.number("amplitude"), c = in.number("center"), w = in.number("width");
    const double off = in.number("offset", 0.0);
    if (!(w > 0.0)) in.fail("width", "must be positive");
    return [=](double s) { return off + a * std::exp(-0.5 * ((s - c) / w) * ((s - c) / w)); };
  }
  if (kind == "random_modes") {
    const long modes = in.integer("modes");
    if (modes < 1 || modes > 64) in.fail("modes", "must be in [1, 64]");
    const double amp = in.number("amplitude", 1.0), off = in.number("offset", 0.0);
    const auto seed = static_cast<std::uint64_t>(root.child("numerics").integer("seed", 0));
    std::mt19937_64 rng(seed);
    std::vector<double> a, th;
    for (long k = 1; k <= modes; ++k) {
      // Explicit mapping of raw 64-bit draws keeps the data identical across standard libraries.
      a.push_back(amp * (2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0) / static_cast<double>(k));
      th.push_back(2 * kPi * static_cast<double>(rng() >> 11) * 0x1.0p-53);
    }
    const double o = grid.origin, L = grid.length;
    return [=](double s) {
      double v = off;
      for (std::size_t k = 0; k < a.size(); ++k) v += a[k] * std::sin(2 * kPi * static_cast<double>(k + 1) * (s - o) / L + th[k]);
      return v;
    };
  }
  in.fail("kind", "unknown initial data \"" + kind + "\" (constant, sine, cone, gaussian, random_modes)");
}

InflowData inflow_from(const Node& root, const std::function<double(double)>& lambda0) {
  const Node g = root.child("geometry");
  const std::string mode = g.string("inflow", "extrapolate");
  InflowData inflow;
  if (mode == "extrapolate") return inflow;
  if (mode == "exact_translation") {
    // lambda_t(s) = lambda0(s - t/2), exact for psi(lambda) = lambda.
    inflow.left = [lambda0](double s, double t) { return lambda0(s - 0.5 * t); };
    inflow.right = inflow.left;
    return inflow;
  }
  g.fail("inflow", "must be \"extrapolate\" or \"exact_translation\"");
}

long stride_from(const Node& root) {
  const Node out = root.child_or_empty("output");
  const long stride = out.integer("snapshot_stride", 10);
  if (stride < 1) out.fail("snapshot_stride", "must be >= 1");
  return stride;
}

json residuals_json(const SolitonReport& rep) {
  json r = json::array();
  for (const auto& n : rep.residuals) r.push_back({{"equation", n.equation}, {"linf", n.linf}, {"l2", n.l2}});
  return {{"verdict", to_string(rep.verdict)}, {"eps_used", rep.eps_used}, {"n_lambda_norm", rep.n_lambda_norm},
          {"tol", rep.tol}, {"residuals", r}, {"notes", rep.notes}};
}

double sup_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// ---------------------------------------------------------------------------
// Scenarios

json umbilical_flow(const Node& root, Context& ctx) {
  const auto F = functional_from(root);
  const auto grid = grid_from(root);
  const auto ctl = control_from(root);
  const auto lambda0 = initial_from(root, grid);
  const auto inflow = inflow_from(root, lambda0);
  const long stride = stride_from(root);

  auto csv = ctx.csv("snapshots.csv", {"t", "s", "lambda", "phi"});
  const auto s = grid.positions();
  long last_written = -1;
  auto write = [&](const UmbilicalProfile& p, long step) {
    if (!csv) return;
    for (std::size_t i = 0; i < s.size(); ++i) csv->row({p.t, s[i], p.lambda[i], p.phi[i]});
    last_written = step;
  };
  const auto p0 = make_profile(grid, lambda0);
  const auto run = evolve_umbilical(p0, F, ctl, inflow, [&](const UmbilicalProfile& p, long step) {
    if (step % stride == 0) write(p, step);
  });
  if (last_written != run.steps) write(run.profile, run.steps);

  json res = {{"steps", run.steps},
              {"t_final", run.profile.t},
              {"lambda_min", *std::min_element(run.profile.lambda.begin(), run.profile.lambda.end())},
              {"lambda_max", *std::max_element(run.profile.lambda.begin(), run.profile.lambda.end())},
              {"phi_min", *std::min_element(run.profile.phi.begin(), run.profile.phi.end())},
              {"total_variation_initial", total_variation(p0.lambda, grid.boundary)},
              {"total_variation_final", total_variation(run.profile.lambda, grid.boundary)},
              {"ds", grid.spacing()}};
  try {
    const auto exact = characteristics_oracle(lambda0, grid, run.profile.t, F);
    double err = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) err = std::max(err, std::abs(exact[i] - run.profile.lambda[i]));
    res["oracle"] = {{"available", true}, {"sup_error", err}};
  } catch (const Error& e) {
    res["oracle"] = {{"available", false}, {"reason", e.what()}};
  }
  return res;
}

json tau_flow(const Node& root, Context& ctx) {
  const auto F = functional_from(root);
  const int n = F.n();
  const auto grid = grid_from(root);
  const auto ctl = control_from(root);
  const long stride = stride_from(root);
  const Node in = root.child("initial");

  TauField f0;
  std::optional<std::function<double(double)>> lambda0;
  if (in.string("kind") == "cpc") {
    const auto k = in.numbers("curvatures");
    if (static_cast<int>(k.size()) != n) in.fail("curvatures", "must list functional.n principal curvatures");
    const auto inv = symmetric_invariants(PrincipalCurvatureSpectrum(k), n);
    f0 = {grid, n, {}, 0.0};
    for (int i = 0; i < grid.nodes; ++i) f0.tau.insert(f0.tau.end(), inv.tau.begin(), inv.tau.end());
  } else {
    lambda0 = initial_from(root, grid);
    const auto p0 = make_profile(grid, *lambda0);
    f0 = make_umbilical_tau_field(grid, n, p0.lambda);
  }

  std::vector<std::string> header{"t", "s"};
  for (int i = 1; i <= n; ++i) header.push_back("tau" + std::to_string(i));
  auto csv = ctx.csv("tau.csv", header);
  const auto s = grid.positions();
  long last_written = -1;
  auto write = [&](const TauField& f, long step) {
    if (!csv) return;
    std::vector<double> row(static_cast<std::size_t>(n) + 2);
    for (int i = 0; i < grid.nodes; ++i) {
      row[0] = f.t;
      row[1] = s[i];
      for (int j = 1; j <= n; ++j) row[j + 1] = f.at(i, j);
      csv->row(row);
    }
    last_written = step;
  };
  const auto run = evolve_tau_system(f0, F, ctl, [&](const TauField& f, long step) {
    if (step % stride == 0) write(f, step);
  });
  if (last_written != run.steps) write(run.field, run.steps);

  json res = {{"steps", run.steps}, {"t_final", run.field.t}, {"ds", grid.spacing()}};
  double drift = 0.0;
  for (std::size_t i = 0; i < f0.tau.size(); ++i) drift = std::max(drift, std::abs(run.field.tau[i] - f0.tau[i]));
  res["max_change"] = drift;
  if (lambda0) {
    if (n >= 2) {
      double defect = 0.0;
      for (int i = 0; i < grid.nodes; ++i) {
        const double t1 = run.field.at(i, 1);
        defect = std::max(defect, std::abs(run.field.at(i, 2) - t1 * t1 / n));
      }
      res["umbilicity_defect"] = defect;
    }
    const auto scalar = evolve_umbilical(make_profile(grid, *lambda0), F, ctl);
    double diff = 0.0;
    for (int i = 0; i < grid.nodes; ++i) diff = std::max(diff, std::abs(run.field.at(i, 1) / n - scalar.profile.lambda[i]));
    res["scalar_agreement"] = diff;
  }
  return res;
}

json soliton_check(const Node& root, Context& ctx) {
  const auto F = functional_from(root);
  const auto grid = grid_from(root);
  const auto p = make_profile(grid, initial_from(root, grid));
  const Node sol = root.child_or_empty("soliton");
  std::optional<double> eps, tol;
  if (sol.has("eps") && !(sol.raw("eps").is_string() && sol.string("eps") == "auto")) eps = sol.number("eps");
  if (sol.has("tol")) {
    tol = sol.number("tol");
    if (!(*tol > 0.0)) sol.fail("tol", "must be positive");
  }
  const auto rep = check_normal_soliton(p, F, eps, tol);
  const auto ck = conformal_killing_factor(p, F, rep.eps_used);

  if (auto csv = ctx.csv("soliton.csv", {"s", "lambda", "psi", "mu", "residual"})) {
    const auto s = grid.positions();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double l = p.lambda[i];
      const double mu = mu_of_lambda(F, l);
      csv->row({s[i], l, psi_of_lambda(F, l), mu, psi_of_lambda(F, l) - rep.eps_used + (2.0 / F.n()) * mu * l});
    }
  }
  json res = residuals_json(rep);
  res["mu_continuity_defect"] = mu_continuity_defect(F);
  res["conformal_killing"] = {{"killing", ck.killing}, {"homothety", ck.homothety}};
  return res;
}

std::function<double(double, double)> metric_component(const Node& m) {
  const std::string kind = m.string("kind");
  if (kind == "constant") {
    const double v = m.number("value");
    return [v](double, double) { return v; };
  }
  if (kind == "exp_x0") {
    const double c = m.number("coefficient", 1.0), r = m.number("rate");
    return [c, r](double x0, double) { return c * std::exp(r * x0); };
  }
  if (kind == "sine_x1") {
    const double mean = m.number("mean"), a = m.number("amplitude"), k = m.number("wavenumber", 1.0);
    return [=](double, double x1) { return mean + a * std::sin(k * x1); };
  }
  m.fail("kind", "unknown metric component \"" + kind + "\" (constant, exp_x0, sine_x1)");
}

json biregular_check(const Node& root, Context& ctx) {
  const auto F = functional_from(root);
  const Node sf = root.child("surface");
  BiregularGrid g;
  const long nx0 = sf.integer("nx0"), nx1 = sf.integer("nx1");
  if (nx0 < 8 || nx0 > 4096) sf.fail("nx0", "must be in [8, 4096]");
  if (nx1 < 8 || nx1 > 4096) sf.fail("nx1", "must be in [8, 4096]");
  g.nx0 = static_cast<int>(nx0);
  g.nx1 = static_cast<int>(nx1);
  g.length0 = sf.number("length0");
  g.length1 = sf.number("length1");
  if (!(g.length0 > 0.0)) sf.fail("length0", "must be positive");
  if (!(g.length1 > 0.0)) sf.fail("length1", "must be positive");
  g.periodic0 = sf.flag("periodic0", false);
  g.periodic1 = sf.flag("periodic1", true);
  const auto g00 = metric_component(sf.child("g00"));
  const auto g11 = metric_component(sf.child("g11"));
  std::function<double(double, double)> x0f, x1f;
  if (sf.has("x0_field")) x0f = metric_component(sf.child("x0_field"));
  if (sf.has("x1_field")) x1f = metric_component(sf.child("x1_field"));
  const std::size_t count = static_cast<std::size_t>(g.nx0) * g.nx1;
  g.g00.resize(count);
  g.g11.resize(count);
  if (x0f) g.x0_field.resize(count);
  if (x1f) g.x1_field.resize(count);
  for (int a = 0; a < g.nx0; ++a) {
    for (int b = 0; b < g.nx1; ++b) {
      const double x0 = a * g.spacing0(), x1 = b * g.spacing1();
      const auto k = g.index(a, b);
      g.g00[k] = g00(x0, x1);
      g.g11[k] = g11(x0, x1);
      if (x0f) g.x0_field[k] = x0f(x0, x1);
      if (x1f) g.x1_field[k] = x1f(x0, x1);
    }
  }
  g.validate();
  const auto lambda = biregular_lambda(g);

  double eps = 0.0;
  const bool auto_eps = !sf.has("eps") || (sf.raw("eps").is_string() && sf.string("eps") == "auto");
  if (auto_eps) {
    // Average of psi(lambda) with the leaf length element sqrt(g11) dx1.
    std::vector<double> tr(count), w(count);
    for (std::size_t k = 0; k < count; ++k) {
      tr[k] = psi_of_lambda(F, lambda[k]) * F.n();
      w[k] = std::sqrt(g.g11[k]);
    }
    eps = estimate_eps_leaf(tr, w, F.n());
  } else {
    eps = sf.number("eps");
  }
  std::optional<double> tol;
  if (sf.has("tol")) tol = sf.number("tol");
  const auto rep = check_biregular_surface(g, F, eps, tol);

  if (auto csv = ctx.csv("biregular.csv", {"x0", "x1", "g00", "g11", "lambda"})) {
    for (int a = 0; a < g.nx0; ++a) {
      for (int b = 0; b < g.nx1; ++b) {
        const auto k = g.index(a, b);
        csv->row({a * g.spacing0(), b * g.spacing1(), g.g00[k], g.g11[k], lambda[k]});
      }
    }
  }
  json res = residuals_json(rep);
  res["eps_policy"] = auto_eps ? "leaf_average" : "given";
  res["lambda_min"] = *std::min_element(lambda.begin(), lambda.end());
  res["lambda_max"] = *std::max_element(lambda.begin(), lambda.end());
  return res;
}

json ricci_classify(const Node& root, Context& ctx) {
  const Node c = root.child("classify");
  const long n = c.integer("n");
  if (n < 3 || n > 1000) c.fail("n", "must be in [3, 1000]");
  const double tau1 = c.number("tau1"), r = c.number("r");
  json res = classification_json(static_cast<int>(n), tau1, r);
  if (auto csv = ctx.csv("spectra.csv", {"n1", "k1", "n2", "k2"})) {
    for (const auto& s : res["spectra"]) {
      csv->row({s["n1"].get<double>(), s["k1"].get<double>(), s["n2"].get<double>(), s["k2"].get<double>()});
    }
  }
  return res;
}

std::vector<FourierCoefficient> grid_csv_coefficients(const Node& h, const fs::path& base, int K) {
  fs::path file = h.string("grid_csv");
  if (file.is_relative()) file = base / file;
  const long M = h.integer("M");
  if (M < 3 || M > 256) h.fail("M", "must be in [3, 256]");
  std::ifstream in(file);
  if (!in) h.fail("grid_csv", "cannot open " + file.string());
  std::vector<double> values(static_cast<std::size_t>(M * M), std::numeric_limits<double>::quiet_NaN());
  std::string line;
  std::getline(in, line);  // header x,y,value
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    double xyz[3];
    char comma = 0;
    if (!(ls >> xyz[0] >> comma >> xyz[1] >> comma >> xyz[2])) {
      h.fail("grid_csv", file.string() + " row " + std::to_string(row) + " is not x,y,value");
    }
    const long a = std::lround(xyz[0] * M), b = std::lround(xyz[1] * M);
    if (a < 0 || a >= M || b < 0 || b >= M || std::abs(xyz[0] * M - a) > 1e-6 || std::abs(xyz[1] * M - b) > 1e-6) {
      h.fail("grid_csv", file.string() + " row " + std::to_string(row) + " is not on the M x M grid over [0,1)^2");
    }
    values[static_cast<std::size_t>(a * M + b)] = xyz[2];
  }
  for (double v : values) {
    if (std::isnan(v)) h.fail("grid_csv", file.string() + " does not cover every grid node");
  }
  return fourier_from_grid(values, static_cast<int>(M), K);
}

json cohomology(const Node& root, Context& ctx) {
  const Node t = root.child("torus");
  TorusCohomologyProblem p;
  p.dim = static_cast<int>(t.integer("dim"));
  p.v = t.numbers("v");
  const long K = t.integer("K");
  if (K < 1 || K > 200) t.fail("K", "must be in [1, 200]");
  p.K = static_cast<int>(K);
  p.s = t.number("s", 1.0);
  p.resonance_floor = t.number("resonance_floor", 1e-12);

  const Node h = root.child("h");
  if (h.has("grid_csv")) {
    if (p.dim != 2) t.fail("dim", "grid input is only available for dim = 2");
    p.h = grid_csv_coefficients(h, ctx.base_dir, p.K);
  } else {
    if (h.has("constant")) add_constant(p, h.number("constant"));
    if (h.has("modes")) {
      const json& modes = h.raw("modes");
      if (!modes.is_array()) h.fail("modes", "must be an array");
      for (std::size_t i = 0; i < modes.size(); ++i) {
        const Node m(modes[i], h.at("modes[" + std::to_string(i) + "]"));
        add_real_mode(p, m.integers("u"), m.number("cos", 0.0), m.number("sin", 0.0));
      }
    }
  }
  const auto sol = solve_linear_flow(p);

  std::vector<std::string> header;
  for (int i = 1; i <= p.dim; ++i) header.push_back("u" + std::to_string(i));
  header.insert(header.end(), {"re", "im"});
  if (auto csv = ctx.csv("coefficients.csv", header)) {
    auto modes = sol.modes;
    std::sort(modes.begin(), modes.end(), [](const SolvedMode& a, const SolvedMode& b) { return a.u < b.u; });
    for (const auto& m : modes) {
      std::vector<double> row(m.u.begin(), m.u.end());
      row.push_back(m.f.real());
      row.push_back(m.f.imag());
      csv->row(row);
    }
  }
  const auto amp = amplification_report(sol);
  json table = json::array();
  if (auto csv = ctx.csv("amplification.csv", {"shell", "modes", "max_amplification", "min_divisor", "bound"})) {
    for (const auto& r : amp) csv->row({double(r.shell), double(r.modes), r.max_amplification, r.min_divisor, r.bound});
  }
  for (const auto& r : amp) {
    table.push_back({{"shell", r.shell}, {"modes", r.modes}, {"max_amplification", r.max_amplification},
                     {"min_divisor", r.min_divisor}, {"bound", r.bound}});
  }
  return {{"mean", sol.mean},
          {"eps", sol.eps},
          {"soliton_scale", sol.soliton_scale},
          {"margin", sol.margin},
          {"margin_mode", sol.margin_mode},
          {"modes", sol.modes.size()},
          {"residual", sol.residual},
          {"imaginary_part", sol.imaginary_part},
          {"verification_nodes", sol.verification_nodes},
          {"amplification", table}};
}

json revolution(const Node& root, Context& ctx) {
  const Node pr = root.child("profile");
  const double a = pr.number("x1_start"), b = pr.number("x1_end"), step = pr.number("step");
  const double C = pr.number("C", 0.0);
  const auto p = integrate_constant_lambda(a, b, step, C);
  const auto table = curvature_table(p);

  double ode_err = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) ode_err = std::max(ode_err, std::abs(p.axis[i] - closed_form_gamma(p.radius[i], C)));
  double worst = 0.0, kmax = -std::numeric_limits<double>::infinity();
  for (const auto& r : table) {
    worst = std::max(worst, std::abs(r.k_formula - r.k_oracle));
    kmax = std::max(kmax, r.k_formula);
  }
  if (auto csv = ctx.csv("curvature.csv", {"x0", "x1", "g00", "g11", "lambda", "K_formula", "K_oracle"})) {
    for (const auto& r : table) csv->row({r.x0, r.x1, r.g00, r.g11, r.lambda, r.k_formula, r.k_oracle});
  }
  if (pr.flag("gnuplot", false) && ctx.write_files) {
    fs::create_directories(ctx.out_dir);
    ctx.files.push_back(ctx.out_dir / "profile.dat");
    std::ofstream dat(ctx.out_dir / "profile.dat", std::ios::binary);
    for (std::size_t i = 0; i < p.size(); ++i) dat << format_double(p.axis[i]) << ' ' << format_double(p.radius[i]) << '\n';
  }
  return {{"samples", p.size()},
          {"ode_closed_form_sup_error", ode_err},
          {"K_at_zero", sectional_curvature_profile(0.0)},
          {"K_max_on_profile", kmax},
          {"K_negative_everywhere", kmax < 0.0},
          {"oracle_max_abs_diff", worst},
          {"oracle_agrees_1e-4", worst <= 1e-4},
          {"slope_at_end", p.radius_d.back()}};
}

json cone_check(const Node& root, Context& ctx) {
  const Node c = root.child("cone");
  double beta = 0.0;
  if (c.has("beta")) {
    beta = c.number("beta");
  } else {
    beta = c.number("beta_deg") * kPi / 180.0;
  }
  if (!(beta > 0.0 && beta < 0.5 * kPi)) c.fail("beta", "must be in (0, pi/2)");
  const double a = c.number("a"), b = c.number("b");
  if (!(b > a)) c.fail("b", "must exceed a");
  StepControl ctl = control_from(root);
  const long nodes = root.child("numerics").integer("nodes");
  if (nodes < 8 || nodes > 1'000'000) root.child("numerics").fail("nodes", "must be in [8, 1000000]");
  const auto rep = cone_flow_check(beta, ctl.t_end, a, b, static_cast<int>(nodes), ctl);

  if (auto csv = ctx.csv("cone.csv", {"s", "lambda", "lambda_exact", "phi", "phi_exp_oracle", "phi_translated_cone"})) {
    const auto& p = rep.final_profile;
    const auto s = p.grid.positions();
    const double t = p.t;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double x = s[i], xt = x - 0.5 * t;
      csv->row({x, p.lambda[i], -2.0 / xt, p.phi[i], std::sin(beta) * xt * xt / x, xt * std::sin(beta)});
    }
  }
  return {{"beta", rep.beta},
          {"t_end", rep.t_end},
          {"a", rep.a},
          {"b", rep.b},
          {"nodes", rep.nodes},
          {"steps", rep.steps},
          {"ds", (b - a) / (nodes - 1)},
          {"lambda_sup_error", rep.lambda_sup_error},
          {"phi_sup_error", rep.phi_sup_error},
          {"phi_translated_cone_gap", rep.phi_translated_cone_gap}};
}

json normalized_ricci(const Node& root, Context& ctx) {
  const auto grid = grid_from(root);
  const auto ctl = control_from(root);
  const long stride = stride_from(root);
  NormalizedRicciOptions opts;
  opts.literal_rho_sign = root.child_or_empty("normalized").flag("literal_rho_sign", false);
  auto p = make_profile(grid, initial_from(root, grid));

  auto csv = ctx.csv("normalized.csv", {"t", "s", "lambda", "phi"});
  auto steps_csv = ctx.csv("steps.csv", {"step", "t", "dt", "rho", "normalization_integral", "max_conformal_rate"});
  const auto s = grid.positions();
  auto write = [&](const UmbilicalProfile& q) {
    if (!csv) return;
    for (std::size_t i = 0; i < s.size(); ++i) csv->row({q.t, s[i], q.lambda[i], q.phi[i]});
  };
  write(p);
  long steps = 0;
  double max_integral = 0.0, max_rate = 0.0, max_phi_change = 0.0;
  bool last_written = true;
  while (p.t < ctl.t_end) {
    if (steps >= ctl.max_steps) {
      throw ProgressError("normalized-ricci: max_steps exhausted at t = " + format_double(p.t), p.t);
    }
    const auto st = normalized_ricci_step(p, ctl, opts);
    ++steps;
    max_integral = std::max(max_integral, std::abs(st.normalization_integral));
    max_rate = std::max(max_rate, st.max_conformal_rate);
    for (std::size_t i = 0; i < p.phi.size(); ++i) max_phi_change = std::max(max_phi_change, std::abs(st.profile.phi[i] - p.phi[i]));
    if (steps_csv) steps_csv->row({double(steps), st.profile.t, st.dt, st.rho, st.normalization_integral, st.max_conformal_rate});
    p = st.profile;
    last_written = steps % stride == 0;
    if (last_written) write(p);
  }
  if (!last_written) write(p);
  return {{"steps", steps},
          {"t_final", p.t},
          {"literal_rho_sign", opts.literal_rho_sign},
          {"max_normalization_integral", max_integral},
          {"max_conformal_rate", max_rate},
          {"max_phi_change_per_step", max_phi_change},
          {"lambda_sup", sup_abs(p.lambda)}};
}

using ScenarioFn = json (*)(const Node&, Context&);

const std::map<std::string, ScenarioFn>& scenarios() {
  static const std::map<std::string, ScenarioFn> table{
      {"umbilical-flow", umbilical_flow}, {"tau-flow", tau_flow},
      {"soliton-check", soliton_check},   {"biregular-check", biregular_check},
      {"ricci-classify", ricci_classify}, {"cohomology", cohomology},
      {"revolution", revolution},         {"cone-check", cone_check},
      {"normalized-ricci", normalized_ricci},
  };
  return table;
}

struct Outcome {
  int exit_code = kExitOk;
  json results;
  json error;
};

Outcome execute(const json& config, Context& ctx) {
  Outcome out;
  auto failure = [&](int code, const char* kind, const std::string& msg) {
    out.exit_code = code;
    out.error = {{"kind", kind}, {"message", msg}};
  };
  try {
    if (!config.is_object()) throw ValidationError("config: top level must be a JSON object");
    const Node root(config, "");
    const std::string name = root.string("scenario");
    const auto it = scenarios().find(name);
    if (it == scenarios().end()) {
      std::string known;
      for (const auto& [k, _] : scenarios()) known += (known.empty() ? "" : ", ") + k;
      root.fail("scenario", "unknown scenario \"" + name + "\" (" + known + ")");
    }
    out.results = it->second(root, ctx);
  } catch (const ValidationError& e) {
    failure(kExitValidation, "validation", e.what());
  } catch (const BlowUpError& e) {
    failure(kExitNumerical, "blow_up", e.what());
    out.error["last_valid_t"] = e.last_valid_t();
  } catch (const ProgressError& e) {
    failure(kExitNumerical, "no_progress", e.what());
    out.error["reached_t"] = e.reached_t();
  } catch (const ShockError& e) {
    failure(kExitNumerical, "shock", e.what());
  } catch (const ResonanceError& e) {
    failure(kExitResonance, "resonance", e.what());
    out.error["worst_mode"] = e.worst_mode();
  } catch (const json::exception& e) {
    failure(kExitValidation, "validation", std::string("config: ") + e.what());
  } catch (const std::exception& e) {
    failure(kExitInternal, "internal", e.what());
  }
  return out;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

json versions() {
  return {{"egf_lab", kLabVersion},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                                "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}};
}

}  // namespace

json load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config: " + path.string() + " is not valid JSON: " + e.what());
  }
}

fs::path resolve_output_dir(const std::optional<fs::path>& cli_out, const json& config) {
  if (cli_out) return *cli_out;
  if (const char* env = std::getenv("EGF_LAB_OUT"); env && *env) return env;
  if (config.is_object() && config.contains("output") && config["output"].is_object()) {
    const auto& o = config["output"];
    if (o.contains("dir") && o["dir"].is_string()) return o["dir"].get<std::string>();
  }
  return "egf_out";
}

RunResult run_scenario(const json& config, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  Context ctx;
  ctx.out_dir = opts.out_dir;
  ctx.base_dir = opts.base_dir;
  ctx.write_files = opts.write_report;
  const Outcome o = execute(config, ctx);

  RunResult r;
  r.exit_code = o.exit_code;
  r.report = {{"versions", versions()},
              {"scenario", config.is_object() && config.contains("scenario") ? config["scenario"] : json()},
              {"config", config},
              {"exit_status", o.exit_code}};
  if (!o.results.is_null()) r.report["results"] = o.results;
  if (!o.error.is_null()) r.report["error"] = o.error;
  json names = json::array();
  for (const auto& f : ctx.files) names.push_back(f.filename().string());
  r.report["files"] = names;
  r.report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.files = ctx.files;
  if (opts.write_report) {
    try {
      fs::create_directories(opts.out_dir);
      write_json(opts.out_dir / "report.json", r.report);
      r.files.push_back(opts.out_dir / "report.json");
    } catch (const std::exception& e) {
      r.exit_code = r.exit_code == kExitOk ? kExitInternal : r.exit_code;
      r.report["error"] = {{"kind", "internal"}, {"message", e.what()}};
    }
  }
  if (!opts.quiet) {
    std::ostream& os = r.exit_code == kExitOk ? std::cout : std::cerr;
    if (r.exit_code == kExitOk) {
      os << r.report["scenario"].get<std::string>() << ": ok\n" << r.report["results"].dump(2) << '\n';
    } else {
      os << "error: " << r.report["error"]["message"].get<std::string>() << '\n';
    }
  }
  return r;
}

double fit_order(const std::vector<double>& ds, const std::vector<double>& errors) {
  if (ds.size() != errors.size() || ds.size() < 2) throw ValidationError("fit_order: needs two or more (ds, error) pairs");
  double mx = 0, my = 0;
  const double n = static_cast<double>(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!(ds[i] > 0.0) || !(errors[i] > 0.0)) throw ValidationError("fit_order: ds and errors must be positive");
    mx += std::log(ds[i]) / n;
    my += std::log(errors[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double x = std::log(ds[i]) - mx;
    sxy += x * (std::log(errors[i]) - my);
    sxx += x * x;
  }
  return sxy / sxx;
}

SweepResult run_sweep(const json& config, SweepAxis axis, int points, const RunOptions& opts) {
  SweepResult out;
  const auto fail = [&](int code, const std::string& msg) {
    out.exit_code = code;
    out.report = {{"versions", versions()}, {"config", config}, {"error", {{"kind", "validation"}, {"message", msg}}}};
    if (!opts.quiet) std::cerr << "error: " << msg << '\n';
    return out;
  };
  if (points < 1 || points > 12) return fail(kExitValidation, "sweep: --points must be in [1, 12]");
  const std::string scenario = config.is_object() && config.contains("scenario") && config["scenario"].is_string()
                                   ? config["scenario"].get<std::string>()
                                   : "";
  const bool supported = scenario == "umbilical-flow" || scenario == "cone-check";
  if (!supported) {
    return fail(kExitValidation, "sweep: axis not supported for scenario \"" + scenario +
                                     "\" (umbilical-flow and cone-check support ds and cfl)");
  }
  if (!config.contains("numerics") || !config["numerics"].is_object() || !config["numerics"].contains("nodes") ||
      !config["numerics"]["nodes"].is_number_integer()) {
    return fail(kExitValidation, "config: numerics.nodes: missing required field");
  }
  // Validate the base configuration once before fanning out.
  {
    Context probe;
    probe.write_files = false;
    json base = config;
    if (axis == SweepAxis::cfl) base["numerics"]["t_end"] = 0.0;
    const Outcome o = execute(base, probe);
    if (o.exit_code == kExitValidation) return fail(kExitValidation, o.error["message"].get<std::string>());
  }

  const bool transmissive = scenario == "cone-check" || (config.contains("geometry") && config["geometry"].is_object() &&
                                                         config["geometry"].value("boundary", "periodic") == "transmissive");
  const int base_nodes = config["numerics"]["nodes"].get<int>();
  std::vector<json> configs;
  for (int k = 0; k < points; ++k) {
    json c = config;
    if (axis == SweepAxis::ds) {
      c["numerics"]["nodes"] = transmissive ? (base_nodes - 1) * (1 << k) + 1 : base_nodes * (1 << k);
    } else {
      const double cfl = points == 1 ? c["numerics"].value("cfl", 0.5) : 0.25 + 1.75 * k / (points - 1);
      c["numerics"]["cfl"] = cfl;
      c["numerics"]["allow_supercritical"] = true;
    }
    configs.push_back(std::move(c));
  }

  std::vector<std::future<Outcome>> jobs;
  for (const auto& c : configs) {
    jobs.push_back(std::async(std::launch::async, [c] {
      Context ctx;
      ctx.write_files = false;
      return execute(c, ctx);
    }));
  }
  std::vector<double> ds, errs;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const Outcome o = jobs[k].get();
    SweepRow row;
    const json& c = configs[k];
    row.nodes = c["numerics"]["nodes"].get<int>();
    row.cfl = c["numerics"].value("cfl", 0.5);
    if (o.exit_code == kExitOk) {
      const json& r = o.results;
      row.ds = r["ds"].get<double>();
      if (scenario == "cone-check") {
        row.error = r["lambda_sup_error"].get<double>();
      } else if (r["oracle"]["available"].get<bool>()) {
        row.error = r["oracle"]["sup_error"].get<double>();
      } else {
        row.error = std::numeric_limits<double>::quiet_NaN();
        row.stable = false;
        row.status = "no oracle: " + r["oracle"]["reason"].get<std::string>();
      }
      if (row.status.empty()) row.status = "ok";
    } else {
      row.stable = false;
      row.error = std::numeric_limits<double>::quiet_NaN();
      row.status = o.error["kind"].get<std::string>() + ": " + o.error["message"].get<std::string>();
      if (o.exit_code == kExitValidation) out.exit_code = kExitValidation;
    }
    if (row.stable) {
      ds.push_back(row.ds);
      errs.push_back(row.error);
    }
    out.rows.push_back(row);
  }

  if (axis == SweepAxis::ds) {
    const bool all_ok = std::all_of(out.rows.begin(), out.rows.end(), [](const SweepRow& r) { return r.stable; });
    if (!all_ok && out.exit_code == kExitOk) out.exit_code = kExitNumerical;
    if (all_ok && out.rows.size() >= 2) out.fitted_order = fit_order(ds, errs);
  } else {
    // Stable: completed and within 10x of the smallest-cfl error.
    const double ref = out.rows.front().stable ? out.rows.front().error : std::numeric_limits<double>::quiet_NaN();
    for (auto& r : out.rows) {
      if (r.stable && !(r.error <= 10.0 * ref + 1e-12)) {
        r.stable = false;
        r.status = "error grew above 10x the smallest-cfl error";
      }
    }
    for (const auto& r : out.rows) {
      if (!r.stable) break;
      out.largest_stable_cfl = r.cfl;
    }
  }

  json rows = json::array();
  for (const auto& r : out.rows) {
    rows.push_back({{"nodes", r.nodes}, {"ds", r.ds}, {"cfl", r.cfl}, {"error", std::isfinite(r.error) ? json(r.error) : json()},
                    {"stable", r.stable}, {"status", r.status}});
  }
  out.report = {{"versions", versions()},
                {"config", config},
                {"axis", axis == SweepAxis::ds ? "ds" : "cfl"},
                {"points", points},
                {"rows", rows},
                {"fitted_order", out.fitted_order ? json(*out.fitted_order) : json()},
                {"largest_stable_cfl", out.largest_stable_cfl ? json(*out.largest_stable_cfl) : json()},
                {"exit_status", out.exit_code}};
  if (opts.write_report) {
    fs::create_directories(opts.out_dir);
    CsvWriter csv(opts.out_dir / "sweep.csv", {"nodes", "ds", "cfl", "error", "stable"});
    for (const auto& r : out.rows) {
      csv.text_row({std::to_string(r.nodes), format_double(r.ds), format_double(r.cfl),
                    std::isfinite(r.error) ? format_double(r.error) : "nan", r.stable ? "1" : "0"});
    }
    write_json(opts.out_dir / "sweep_report.json", out.report);
  }
  if (!opts.quiet) {
    std::cout << "sweep over " << (axis == SweepAxis::ds ? "ds" : "cfl") << "\n";
    for (const auto& r : out.rows) {
      std::cout << "  nodes=" << r.nodes << " ds=" << format_double(r.ds) << " cfl=" << format_double(r.cfl)
                << " error=" << format_double(r.error) << " " << r.status << '\n';
    }
    if (out.fitted_order) std::cout << "fitted order: " << format_double(*out.fitted_order) << '\n';
    if (out.largest_stable_cfl) std::cout << "largest stable cfl: " << format_double(*out.largest_stable_cfl) << '\n';
  }
  return out;
}

json classification_json(int n, double tau1, double r) {
  const auto c = classify_ricci_soliton(n, tau1, r);
  json spectra = json::array();
  for (const auto& s : c.spectra) {
    spectra.push_back({{"k1", s.k1}, {"n1", s.n1}, {"k2", s.k2}, {"n2", s.n2}, {"spectrum", s.expand()}});
  }
  return {{"n", c.n},
          {"tau1", c.tau1},
          {"r", c.r},
          {"discriminant", c.discriminant},
          {"real_roots", !c.roots.empty()},
          {"roots", c.roots},
          {"n2_minus_n1", c.n2_minus_n1 ? json(*c.n2_minus_n1) : json()},
          {"spectra", spectra},
          {"cpc", c.cpc}};
}

}  // namespace egf
