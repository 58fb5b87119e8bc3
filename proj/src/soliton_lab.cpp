#include "egf/soliton_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "egf/errors.hpp"

namespace egf {

namespace {

constexpr double kMuSwitch = 1e-8;

ResidualNorm norms(std::string name, const std::vector<double>& r) {
  ResidualNorm out{std::move(name), 0.0, 0.0};
  double sq = 0.0;
  for (double v : r) {
    out.linf = std::max(out.linf, std::abs(v));
    sq += v * v;
  }
  out.l2 = r.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(r.size()));
  return out;
}

// Arclength derivative of a profile quantity, same stencil as the flow engine.
double profile_derivative(const std::vector<double>& v, const CurveGrid& grid, int i) {
  const int g = grid.nodes;
  const double ds = grid.spacing();
  if (grid.boundary == Boundary::periodic) return (v[(i + 1) % g] - v[(i - 1 + g) % g]) / (2.0 * ds);
  if (i == 0) return (v[1] - v[0]) / ds;
  if (i == g - 1) return (v[g - 1] - v[g - 2]) / ds;
  return (v[i + 1] - v[i - 1]) / (2.0 * ds);
}

// Second-order derivative along one axis of a 2D array; one-sided at open ends.
double axis_derivative(const std::vector<double>& v, const BiregularGrid& g, int i0, int i1, int axis) {
  const int count = axis == 0 ? g.nx0 : g.nx1;
  const bool periodic = axis == 0 ? g.periodic0 : g.periodic1;
  const double h = axis == 0 ? g.spacing0() : g.spacing1();
  const int i = axis == 0 ? i0 : i1;
  auto at = [&](int j) {
    if (periodic) j = ((j % count) + count) % count;
    return axis == 0 ? v[g.index(j, i1)] : v[g.index(i0, j)];
  };
  if (periodic || (i > 0 && i < count - 1)) return (at(i + 1) - at(i - 1)) / (2.0 * h);
  if (i == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  return (3.0 * at(count - 1) - 4.0 * at(count - 2) + at(count - 3)) / (2.0 * h);
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::soliton:
      return "soliton";
    case Verdict::not_soliton:
      return "not_soliton";
    case Verdict::degenerate:
      return "degenerate";
  }
  return "unknown";
}

double SolitonReport::max_residual() const {
  double m = 0.0;
  for (const auto& r : residuals) m = std::max(m, r.linf);
  return m;
}

double mu_of_lambda(const FlowFunctional& F, double lambda) {
  const double half_n = 0.5 * F.n();
  if (const auto a = F.affine_slope()) return -half_n * *a;
  if (std::abs(lambda) < kMuSwitch) {
    const double h = 1e-6;
    const double dpsi0 = (psi_of_lambda(F, h) - psi_of_lambda(F, -h)) / (2.0 * h);
    return -half_n * dpsi0;
  }
  return -half_n * (psi_of_lambda(F, lambda) - psi_of_lambda(F, 0.0)) / lambda;
}

double mu_continuity_defect(const FlowFunctional& F) {
  const double mu0 = mu_of_lambda(F, 0.0);
  return std::max(std::abs(mu_of_lambda(F, kMuSwitch) - mu0), std::abs(mu_of_lambda(F, -kMuSwitch) - mu0));
}

double grid_tolerance(double spacing) { return std::max(1e-8, 10.0 * spacing * spacing); }

SolitonReport check_normal_soliton(const UmbilicalProfile& p, const FlowFunctional& F, std::optional<double> eps,
                                   std::optional<double> tol) {
  p.validate();
  const int g = p.grid.nodes;
  const double n = F.n();
  SolitonReport rep;
  rep.eps_used = eps.value_or(psi_of_lambda(F, 0.0));
  rep.tol = tol.value_or(grid_tolerance(p.grid.spacing()));

  std::vector<double> primary(static_cast<std::size_t>(g));
  std::vector<double> traced(static_cast<std::size_t>(g));
  double min_dpsi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < g; ++i) {
    const double l = p.lambda[i];
    const double mu = mu_of_lambda(F, l);
    const double psi = psi_of_lambda(F, l);
    primary[i] = psi - rep.eps_used + (2.0 / n) * mu * l;
    // Tracing h(b) = eps g - 2 mu b_1 instead: div(mu N) = -n mu lambda.
    traced[i] = psi - rep.eps_used + 2.0 * mu * l;
    rep.n_lambda_norm = std::max(rep.n_lambda_norm, std::abs(profile_derivative(p.lambda, p.grid, i)));
    min_dpsi = std::min(min_dpsi, std::abs(psi_prime(F, l)));
  }
  rep.residuals.push_back(norms("psi(lambda) - eps + (2/n) mu lambda", primary));
  rep.residuals.push_back(norms("N(lambda)", {rep.n_lambda_norm}));
  const ResidualNorm traced_norm = norms("psi(lambda) - eps + 2 mu lambda", traced);

  const bool primary_ok = rep.residuals[0].linf <= rep.tol;
  const bool traced_ok = traced_norm.linf <= rep.tol;
  {
    std::ostringstream os;
    os << "normalization: " << (primary_ok && traced_ok ? "both" : primary_ok ? "(2/n) mu lambda" : traced_ok ? "2 mu lambda" : "neither")
       << " (trace-normalized residual " << traced_norm.linf << ")";
    rep.notes.push_back(os.str());
  }

  const bool flat = rep.n_lambda_norm <= rep.tol;
  if (primary_ok && flat) {
    rep.verdict = Verdict::soliton;
    const double mean = p.lambda.front();
    std::ostringstream os;
    os.precision(17);
    os << "alternative: X = 0 with eps = psi(lambda) = " << psi_of_lambda(F, mean);
    rep.notes.push_back(os.str());
  } else if (min_dpsi <= 1e-8) {
    rep.verdict = Verdict::degenerate;
    rep.notes.push_back("psi' vanishes on the profile; N(lambda) = 0 is not implied");
  } else {
    rep.verdict = Verdict::not_soliton;
  }
  return rep;
}

void BiregularGrid::validate() const {
  if (nx0 < 8 || nx1 < 8) throw ValidationError("biregular grid: at least 8x8 nodes required");
  if (!(length0 > 0.0) || !(length1 > 0.0)) throw ValidationError("biregular grid: lengths must be positive");
  const auto size = static_cast<std::size_t>(nx0) * nx1;
  if (g00.size() != size || g11.size() != size) throw ValidationError("biregular grid: metric arrays have wrong size");
  if (!x0_field.empty() && x0_field.size() != size) throw ValidationError("biregular grid: X0 has wrong size");
  if (!x1_field.empty() && x1_field.size() != size) throw ValidationError("biregular grid: X1 has wrong size");
  for (std::size_t k = 0; k < size; ++k) {
    if (!(g00[k] > 0.0) || !(g11[k] > 0.0) || !std::isfinite(g00[k]) || !std::isfinite(g11[k])) {
      throw ValidationError("biregular grid: metric must be positive and finite at every node");
    }
  }
}

std::vector<double> biregular_lambda(const BiregularGrid& g) {
  g.validate();
  std::vector<double> log_g11(g.g11.size());
  for (std::size_t k = 0; k < g.g11.size(); ++k) log_g11[k] = std::log(g.g11[k]);
  std::vector<double> lambda(g.g11.size());
  for (int i0 = 0; i0 < g.nx0; ++i0) {
    for (int i1 = 0; i1 < g.nx1; ++i1) {
      const auto k = g.index(i0, i1);
      lambda[k] = -axis_derivative(log_g11, g, i0, i1, 0) / (2.0 * std::sqrt(g.g00[k]));
    }
  }
  return lambda;
}

SolitonReport check_biregular_surface(const BiregularGrid& g, const FlowFunctional& F, double eps,
                                      std::optional<double> tol) {
  const auto lambda = biregular_lambda(g);
  const auto size = g.g11.size();
  const std::vector<double> zeros(size, 0.0);
  const auto& x0 = g.x0_field.empty() ? zeros : g.x0_field;
  const auto& x1 = g.x1_field.empty() ? zeros : g.x1_field;
  std::vector<double> log_g00(size);
  for (std::size_t k = 0; k < size; ++k) log_g00[k] = std::log(g.g00[k]);

  std::vector<double> r1(size), r2(size), r3(size), r4(size);
  for (int i0 = 0; i0 < g.nx0; ++i0) {
    for (int i1 = 0; i1 < g.nx1; ++i1) {
      const auto k = g.index(i0, i1);
      const double d1x1 = axis_derivative(x1, g, i0, i1, 1);
      const double d0g11 = axis_derivative(g.g11, g, i0, i1, 0);
      const double d1g11 = axis_derivative(g.g11, g, i0, i1, 1);
      r1[k] = psi_of_lambda(F, lambda[k]) - eps - (2.0 * d1x1 * g.g11[k] + x0[k] * d0g11 + x1[k] * d1g11);
      r2[k] = axis_derivative(x0, g, i0, i1, 1);
      r3[k] = axis_derivative(x1, g, i0, i1, 0);
      const double x_log_g00 =
          x0[k] * axis_derivative(log_g00, g, i0, i1, 0) + x1[k] * axis_derivative(log_g00, g, i0, i1, 1);
      r4[k] = axis_derivative(x0, g, i0, i1, 0) + 0.5 * x_log_g00;
    }
  }

  SolitonReport rep;
  rep.eps_used = eps;
  const double h = std::max(g.spacing0(), g.spacing1());
  rep.tol = tol.value_or(10.0 * h * h);
  rep.residuals = {norms("R1: psi(lambda) - eps - (2 d1X1 g11 + X0 g11,0 + X1 g11,1)", r1),
                   norms("R2: d1 X0", r2), norms("R3: d0 X1", r3), norms("R4: d0 X0 + X(log g00)/2", r4)};
  double max_dlambda = 0.0;
  for (int i0 = 0; i0 < g.nx0; ++i0) {
    for (int i1 = 0; i1 < g.nx1; ++i1) max_dlambda = std::max(max_dlambda, std::abs(axis_derivative(lambda, g, i0, i1, 0)));
  }
  rep.n_lambda_norm = max_dlambda;
  rep.verdict = rep.max_residual() <= rep.tol ? Verdict::soliton : Verdict::not_soliton;
  return rep;
}

double check_trace_identity(const PrincipalCurvatureSpectrum& spec, const FlowFunctional& F, double eps, double div_x) {
  double trace = 0.0;
  for (double h : assemble_h_eigen(spec, F)) trace += h;
  return trace - spec.n() * eps - 2.0 * div_x;
}

double estimate_eps_leaf(const std::vector<double>& trace_samples, const std::vector<double>& weights, int n) {
  if (n < 1) throw ValidationError("estimate_eps_leaf: n must be >= 1");
  if (trace_samples.size() != weights.size() || trace_samples.empty()) {
    throw ValidationError("estimate_eps_leaf: samples and weights must be non-empty and of equal length");
  }
  double sw = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw ValidationError("estimate_eps_leaf: weights must be nonnegative");
    sw += weights[i];
    acc += weights[i] * trace_samples[i];
  }
  if (!(sw > 0.0)) throw ValidationError("estimate_eps_leaf: total weight must be positive");
  return acc / sw / n;
}

ConformalKillingReport conformal_killing_factor(const UmbilicalProfile& p, const FlowFunctional& F, double eps,
                                                double tol) {
  p.validate();
  ConformalKillingReport rep;
  rep.mu.reserve(p.lambda.size());
  for (double l : p.lambda) rep.mu.push_back(psi_of_lambda(F, l) - eps);
  const auto [lo, hi] = std::minmax_element(rep.mu.begin(), rep.mu.end());
  rep.homothety = *hi - *lo <= tol;
  rep.killing = std::max(std::abs(*lo), std::abs(*hi)) <= tol;
  return rep;
}

std::vector<double> AdmissibleSpectrum::expand() const {
  std::vector<double> k(static_cast<std::size_t>(n1), k1);
  k.insert(k.end(), static_cast<std::size_t>(n2), k2);
  return k;
}

SpectrumClassification classify_ricci_soliton(int n, double tau1, double r) {
  if (n < 3) throw ValidationError("classify_ricci_soliton: n must be >= 3");
  if (!std::isfinite(tau1) || !std::isfinite(r)) throw ValidationError("classify_ricci_soliton: inputs must be finite");
  SpectrumClassification c;
  c.n = n;
  c.tau1 = tau1;
  c.r = r;
  c.discriminant = tau1 * tau1 + 4.0 * r;
  const double disc_scale = tau1 * tau1 + 4.0 * std::abs(r);
  if (c.discriminant < -1e-14 * disc_scale) return c;

  if (c.discriminant <= 1e-14 * disc_scale) {
    c.roots = {0.5 * tau1};
  } else {
    const double sq = std::sqrt(c.discriminant);
    const double k1 = 0.5 * (tau1 + sq);
    const double k2 = 0.5 * (tau1 - sq);
    c.roots = {k1, k2};
    // n1 curvatures equal k1, n2 equal k2: n2 - n1 = (n - 2) tau1 / sqrt(disc).
    const double d = (n - 2) * tau1 / sq;
    c.n2_minus_n1 = d;
    const double m = std::round(d);
    if (std::abs(d - m) <= 1e-9 && (n + static_cast<long>(m)) % 2 == 0) {
      const int n2 = static_cast<int>((n + static_cast<long>(m)) / 2);
      if (n2 >= 1 && n2 <= n - 1) c.spectra.push_back({k1, k2, n - n2, n2});
    }
  }

  // All n curvatures equal: k = tau1 / n with k (k - tau1) = r.
  const double k = tau1 / n;
  const double lhs = k * (k - tau1);
  if (std::abs(lhs - r) <= 1e-10 * std::max({1.0, std::abs(r), std::abs(k * tau1)})) {
    c.spectra.push_back({k, k, n, 0});
  }
  c.cpc = !c.spectra.empty();
  return c;
}

}  // namespace egf
