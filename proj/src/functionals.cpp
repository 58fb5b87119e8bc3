#include "egf/functionals.hpp"

#include <sstream>

#include "egf/errors.hpp"

namespace egf {

namespace {

double param(const std::map<std::string, double>& params, const std::string& key, const std::string& fn) {
  auto it = params.find(key);
  if (it == params.end()) throw ValidationError("functional " + fn + ": missing parameter '" + key + "'");
  return it->second;
}

FlowCoefficient zero() {
  return {"", [](std::span<const double>) { return 0.0; }};
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::vector<std::string> functional_catalog() {
  return {"b1", "tau1_minus_c", "ext_ricci", "umbilical_square", "affine"};
}

FlowFunctional make_functional(const std::string& name, int n, const std::map<std::string, double>& params) {
  if (n < 1) throw ValidationError("functional " + name + ": n must be >= 1");
  std::vector<FlowCoefficient> f(static_cast<std::size_t>(n));
  for (auto& c : f) c = zero();
  const double nd = n;

  if (name == "b1") {
    if (n == 1) {
      // b_1 = tau_1 b_0 on a one-dimensional leaf.
      f[0] = {"f0 = tau1", [](std::span<const double> t) { return t[0]; }};
    } else {
      f[1] = {"f1 = 1", [](std::span<const double>) { return 1.0; }};
    }
  } else if (name == "tau1_minus_c") {
    const double c = param(params, "c", name);
    f[0] = {"f0 = tau1 - " + num(c), [c](std::span<const double> t) { return t[0] - c; }};
  } else if (name == "ext_ricci") {
    if (n == 1) throw ValidationError("functional ext_ricci: Ric^ex vanishes identically for n = 1");
    if (n == 2) {
      // -2 tau_1 b_1 + 2 b_2 = -2 sigma_2 g on a two-dimensional leaf.
      f[0] = {"f0 = -(tau1^2 - tau2)", [](std::span<const double> t) { return -(t[0] * t[0] - t[1]); }};
    } else {
      f[1] = {"f1 = -2*tau1", [](std::span<const double> t) { return -2.0 * t[0]; }};
      f[2] = {"f2 = 2", [](std::span<const double>) { return 2.0; }};
    }
  } else if (name == "umbilical_square") {
    f[0] = {"f0 = (tau1/n)^2", [nd](std::span<const double> t) { return (t[0] / nd) * (t[0] / nd); }};
  } else if (name == "affine") {
    const double a = param(params, "a", name);
    const double b = param(params, "b", name);
    f[0] = {"f0 = " + num(a) + "*tau1/n + " + num(b),
            [a, b, nd](std::span<const double> t) { return a * t[0] / nd + b; }};
  } else {
    std::string known;
    for (const auto& k : functional_catalog()) known += (known.empty() ? "" : ", ") + k;
    throw ValidationError("functional: unknown name '" + name + "' (known: " + known + ")");
  }
  FlowFunctional F(n, std::move(f), name);
  if (name == "b1") F.set_affine_slope(1.0);
  if (name == "tau1_minus_c") F.set_affine_slope(nd);
  if (name == "affine") F.set_affine_slope(param(params, "a", name));
  return F;
}

}  // namespace egf
