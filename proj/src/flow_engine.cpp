#include "egf/flow_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "egf/errors.hpp"

namespace egf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Node value with ghost handling: periodic wrap, inflow callback, or constant
// extrapolation of the nearest boundary node.
struct GhostedView {
  std::span<const double> v;
  const CurveGrid& grid;
  const InflowData* inflow;
  double t;

  double operator()(int i) const {
    const int g = grid.nodes;
    if (i >= 0 && i < g) return v[i];
    if (grid.boundary == Boundary::periodic) return v[((i % g) + g) % g];
    if (i < 0) {
      if (inflow && inflow->left) return inflow->left(grid.node(i), t);
      return v[0];
    }
    if (inflow && inflow->right) return inflow->right(grid.node(i), t);
    return v[g - 1];
  }
};

// d_t lambda for the umbilical law. For Lax-Friedrichs the averaging term
// depends on dt, so dt is passed in.
std::vector<double> umbilical_rate(std::span<const double> lambda, const CurveGrid& grid,
                                   const FlowFunctional& F, Scheme scheme, double dt, double t,
                                   const InflowData& inflow) {
  const int g = grid.nodes;
  const double ds = grid.spacing();
  const GhostedView at{lambda, grid, &inflow, t};
  std::vector<double> rate(static_cast<std::size_t>(g));
  if (scheme == Scheme::upwind) {
    for (int i = 0; i < g; ++i) {
      const double a = 0.5 * psi_prime(F, lambda[i]);
      const double d = a >= 0.0 ? (lambda[i] - at(i - 1)) / ds : (at(i + 1) - lambda[i]) / ds;
      rate[i] = -a * d;
    }
  } else {
    for (int i = 0; i < g; ++i) {
      const double lm = at(i - 1);
      const double lp = at(i + 1);
      const double flux_m = 0.5 * psi_of_lambda(F, lm);
      const double flux_p = 0.5 * psi_of_lambda(F, lp);
      rate[i] = (0.5 * (lp + lm) - lambda[i]) / dt - (flux_p - flux_m) / (2.0 * ds);
    }
  }
  return rate;
}

void require_finite(std::span<const double> v, double last_t, const char* what) {
  if (!all_finite(v)) {
    std::ostringstream os;
    os << what << ": non-finite value produced; last valid t = " << last_t;
    throw BlowUpError(os.str(), last_t);
  }
}

}  // namespace

void CurveGrid::validate() const {
  if (nodes < 8) throw ValidationError("grid: at least 8 nodes required");
  if (!(length > 0.0) || !std::isfinite(length)) throw ValidationError("grid: length must be positive");
  if (!std::isfinite(origin)) throw ValidationError("grid: origin must be finite");
}

double CurveGrid::spacing() const {
  return boundary == Boundary::periodic ? length / nodes : length / (nodes - 1);
}

std::vector<double> CurveGrid::positions() const {
  std::vector<double> s(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) s[i] = node(i);
  return s;
}

std::vector<double> CurveGrid::weights() const {
  std::vector<double> w(static_cast<std::size_t>(nodes), spacing());
  if (boundary == Boundary::transmissive) {
    w.front() *= 0.5;
    w.back() *= 0.5;
  }
  return w;
}

void UmbilicalProfile::validate() const {
  grid.validate();
  const auto g = static_cast<std::size_t>(grid.nodes);
  if (lambda.size() != g || phi.size() != g) throw ValidationError("profile: lambda/phi size differs from grid");
  if (!all_finite(lambda)) throw ValidationError("profile: lambda must be finite");
  for (double p : phi) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ValidationError("profile: phi must be positive and finite");
  }
}

UmbilicalProfile make_profile(const CurveGrid& grid, const std::function<double(double)>& lambda0) {
  grid.validate();
  UmbilicalProfile p;
  p.grid = grid;
  p.lambda.resize(static_cast<std::size_t>(grid.nodes));
  for (int i = 0; i < grid.nodes; ++i) p.lambda[i] = lambda0(grid.node(i));
  p.phi.assign(static_cast<std::size_t>(grid.nodes), 1.0);
  p.validate();
  return p;
}

void TauField::validate() const {
  grid.validate();
  if (n < 1) throw ValidationError("tau field: n must be >= 1");
  if (tau.size() != static_cast<std::size_t>(grid.nodes) * static_cast<std::size_t>(n)) {
    throw ValidationError("tau field: storage size differs from nodes x n");
  }
  if (!all_finite(tau)) throw ValidationError("tau field: entries must be finite");
}

std::vector<double> TauField::component(int i) const {
  std::vector<double> c(static_cast<std::size_t>(grid.nodes));
  for (int k = 0; k < grid.nodes; ++k) c[k] = at(k, i);
  return c;
}

TauField make_umbilical_tau_field(const CurveGrid& grid, int n, std::span<const double> lambda) {
  grid.validate();
  if (static_cast<int>(lambda.size()) != grid.nodes) throw ValidationError("tau field: lambda size differs from grid");
  TauField f;
  f.grid = grid;
  f.n = n;
  f.tau.resize(static_cast<std::size_t>(grid.nodes) * n);
  for (int k = 0; k < grid.nodes; ++k) {
    double p = 1.0;
    for (int i = 1; i <= n; ++i) {
      p *= lambda[k];
      f.at(k, i) = n * p;
    }
  }
  f.validate();
  return f;
}

void StepControl::validate() const {
  if (!(cfl > 0.0) || (!allow_supercritical && cfl > 1.0)) throw ValidationError("numerics.cfl: must lie in (0, 1]");
  if (max_steps < 1) throw ValidationError("numerics.max_steps: must be >= 1");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ValidationError("numerics.t_end: must be finite and >= 0");
}

double total_variation(std::span<const double> v, Boundary boundary) {
  double tv = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) tv += std::abs(v[i] - v[i - 1]);
  if (boundary == Boundary::periodic && v.size() > 1) tv += std::abs(v.front() - v.back());
  return tv;
}

double umbilical_time_step(const UmbilicalProfile& p, const FlowFunctional& F, const StepControl& ctl) {
  double speed = 0.0;
  for (double l : p.lambda) speed = std::max(speed, std::abs(0.5 * psi_prime(F, l)));
  if (speed == 0.0) return kInf;
  return ctl.cfl * p.grid.spacing() / speed;
}

UmbilicalProfile step_umbilical(const UmbilicalProfile& p, const FlowFunctional& F, const StepControl& ctl,
                                const InflowData& inflow) {
  const double remaining = ctl.t_end - p.t;
  UmbilicalProfile next = p;
  if (remaining <= 0.0) return next;
  double dt = umbilical_time_step(p, F, ctl);
  const bool last = dt >= remaining;
  if (last) dt = remaining;

  const auto r1 = umbilical_rate(p.lambda, p.grid, F, ctl.scheme, dt, p.t, inflow);
  for (std::size_t i = 0; i < next.lambda.size(); ++i) next.lambda[i] = p.lambda[i] + dt * r1[i];
  if (ctl.integrator == Integrator::heun) {
    require_finite(next.lambda, p.t, "step_umbilical");
    const auto r2 = umbilical_rate(next.lambda, p.grid, F, ctl.scheme, dt, p.t + dt, inflow);
    for (std::size_t i = 0; i < next.lambda.size(); ++i) {
      next.lambda[i] = 0.5 * (p.lambda[i] + next.lambda[i] + dt * r2[i]);
    }
  }
  require_finite(next.lambda, p.t, "step_umbilical");
  next.t = last ? ctl.t_end : p.t + dt;
  return next;
}

std::vector<double> evolve_warping(std::span<const Snapshot> history, const UmbilicalProfile& p0,
                                   const FlowFunctional& F) {
  p0.validate();
  const auto g = p0.lambda.size();
  for (const auto& s : history) {
    if (s.lambda.size() != g) throw ValidationError("evolve_warping: snapshot grid differs from the initial profile");
  }
  for (std::size_t k = 1; k < history.size(); ++k) {
    if (!(history[k].t >= history[k - 1].t)) throw ValidationError("evolve_warping: snapshots must be time-ordered");
  }
  std::vector<double> integral(g, 0.0);
  for (std::size_t k = 1; k < history.size(); ++k) {
    const double dt = history[k].t - history[k - 1].t;
    for (std::size_t i = 0; i < g; ++i) {
      integral[i] += 0.5 * dt * (psi_of_lambda(F, history[k - 1].lambda[i]) + psi_of_lambda(F, history[k].lambda[i]));
    }
  }
  std::vector<double> phi(g);
  for (std::size_t i = 0; i < g; ++i) phi[i] = p0.phi[i] * std::exp(0.5 * integral[i]);
  return phi;
}

UmbilicalRun evolve_umbilical(const UmbilicalProfile& p0, const FlowFunctional& F, const StepControl& ctl,
                              const InflowData& inflow, const ProfileHook& hook) {
  p0.validate();
  ctl.validate();
  UmbilicalRun run;
  run.profile = p0;
  run.history.push_back({p0.t, p0.lambda});
  if (hook) hook(run.profile, 0);

  const double tv0 = total_variation(p0.lambda, p0.grid.boundary);
  const auto g = p0.lambda.size();
  std::vector<double> integral(g, 0.0);
  std::vector<double> psi_prev(g);
  for (std::size_t i = 0; i < g; ++i) psi_prev[i] = psi_of_lambda(F, p0.lambda[i]);

  while (run.profile.t < ctl.t_end) {
    if (run.steps >= ctl.max_steps) {
      std::ostringstream os;
      os << "evolve_umbilical: max_steps = " << ctl.max_steps << " exhausted at t = " << run.profile.t
         << " before t_end = " << ctl.t_end;
      throw ProgressError(os.str(), run.profile.t);
    }
    const double t_prev = run.profile.t;
    run.profile = step_umbilical(run.profile, F, ctl, inflow);
    ++run.steps;
    const double tv = total_variation(run.profile.lambda, p0.grid.boundary);
    if (tv0 > 0.0 && tv > 10.0 * tv0) {
      std::ostringstream os;
      os << "evolve_umbilical: total variation grew from " << tv0 << " to " << tv
         << " (oscillation blow-up); last valid t = " << t_prev;
      throw BlowUpError(os.str(), t_prev);
    }
    const double dt = run.profile.t - t_prev;
    for (std::size_t i = 0; i < g; ++i) {
      const double psi = psi_of_lambda(F, run.profile.lambda[i]);
      integral[i] += 0.5 * dt * (psi_prev[i] + psi);
      psi_prev[i] = psi;
      run.profile.phi[i] = p0.phi[i] * std::exp(0.5 * integral[i]);
    }
    run.history.push_back({run.profile.t, run.profile.lambda});
    if (hook) hook(run.profile, run.steps);
  }
  return run;
}

std::vector<double> characteristics_oracle(const std::function<double(double)>& lambda0, const CurveGrid& grid,
                                           double t, const FlowFunctional& F) {
  grid.validate();
  if (!(t >= 0.0)) throw ValidationError("characteristics_oracle: t must be >= 0");
  const bool periodic = grid.boundary == Boundary::periodic;
  auto initial = [&](double s0) {
    if (periodic) {
      double x = std::fmod(s0 - grid.origin, grid.length);
      if (x < 0.0) x += grid.length;
      s0 = grid.origin + x;
    }
    return lambda0(s0);
  };
  auto speed = [&](double s0) { return 0.5 * psi_prime(F, initial(s0)); };

  // Bound the shift over the domain, widen once to cover the feet.
  const int samples = 8 * grid.nodes;
  auto max_speed_on = [&](double a, double b) {
    double m = 0.0;
    for (int k = 0; k <= samples; ++k) m = std::max(m, std::abs(speed(a + (b - a) * k / samples)));
    return m;
  };
  const double lo = grid.origin;
  const double hi = grid.origin + grid.length;
  double reach = max_speed_on(lo, hi) * t;
  reach = std::max(reach, max_speed_on(lo - reach, hi + reach) * t) * 1.01 + 1e-12 * (1.0 + grid.length);

  // Foot map must stay strictly increasing for a single-valued solution.
  double prev_x = -kInf;
  for (int k = 0; k <= samples; ++k) {
    const double s0 = (lo - reach) + (hi - lo + 2.0 * reach) * k / samples;
    const double x = s0 + speed(s0) * t;
    if (!(x > prev_x)) {
      std::ostringstream os;
      os << "characteristics_oracle: characteristics cross near s0 = " << s0 << " by t = " << t;
      throw ShockError(os.str(), t);
    }
    prev_x = x;
  }

  std::vector<double> out(static_cast<std::size_t>(grid.nodes));
  for (int i = 0; i < grid.nodes; ++i) {
    const double s = grid.node(i);
    auto foot = [&](double s0) { return s0 + speed(s0) * t - s; };
    double a = s - reach;
    double b = s + reach;
    while (foot(a) > 0.0) a -= reach + 1.0;
    while (foot(b) < 0.0) b += reach + 1.0;
    for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(s)); ++it) {
      const double m = 0.5 * (a + b);
      (foot(m) > 0.0 ? b : a) = m;
    }
    out[i] = initial(0.5 * (a + b));
  }
  return out;
}

namespace {

// Per-node coefficient data of the tau system.
struct TauNodeData {
  std::vector<double> ext;  // tau_0..tau_{2n-2} (tau_0 = n)
  std::vector<double> f;    // f_0..f_{n-1}
};

std::vector<double> extended_powers(std::span<const double> tau, int n, int top) {
  std::vector<double> ext(static_cast<std::size_t>(std::max(top, n) + 1));
  ext[0] = n;
  for (int i = 1; i <= n; ++i) ext[i] = tau[i - 1];
  if (top > n) {
    const auto sigma = elementary_from_power(tau, n);
    const auto more = extend_power_unchecked(tau, sigma, top);
    for (int j = n + 1; j <= top; ++j) ext[j] = more[j - n - 1];
  }
  return ext;
}

// Infinity norm of d(rate)/d(d_s tau): bounds the characteristic speeds.
double speed_bound(std::span<const double> tau, const FlowFunctional& F) {
  const int n = F.n();
  const int top = std::max(2 * n - 2, n);
  const auto ext = extended_powers(tau, n, top);
  std::vector<double> f(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) f[j] = F.coefficient(j, tau);

  // df[j][k] = d f_j / d tau_k, dext[m][k] = d tau_m / d tau_k
  std::vector<std::vector<double>> df(n, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> dext(top + 1, std::vector<double>(n, 0.0));
  std::vector<double> probe(tau.begin(), tau.end());
  for (int k = 0; k < n; ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(tau[k]));
    probe[k] = tau[k] + h;
    const auto ep = extended_powers(probe, n, top);
    std::vector<double> fp(n);
    for (int j = 0; j < n; ++j) fp[j] = F.coefficient(j, probe);
    probe[k] = tau[k] - h;
    const auto em = extended_powers(probe, n, top);
    for (int j = 0; j < n; ++j) df[j][k] = (fp[j] - F.coefficient(j, probe)) / (2.0 * h);
    for (int m = 0; m <= top; ++m) dext[m][k] = m <= n ? (m == k + 1 ? 1.0 : 0.0) : (ep[m] - em[m]) / (2.0 * h);
    probe[k] = tau[k];
  }

  double bound = 0.0;
  for (int i = 1; i <= n; ++i) {
    double row = 0.0;
    for (int k = 0; k < n; ++k) {
      double m = ext[i - 1] * df[0][k];
      for (int j = 1; j < n; ++j) {
        m += j * f[j] / (i + j - 1) * dext[i + j - 1][k] + ext[i + j - 1] * df[j][k];
      }
      row += std::abs(0.5 * i * m);
    }
    bound = std::max(bound, row);
  }
  return bound;
}

// Derivative along the curve: central inside, one-sided at transmissive ends.
double ds_derivative(std::span<const double> v, const CurveGrid& grid, int i) {
  const int g = grid.nodes;
  const double ds = grid.spacing();
  if (grid.boundary == Boundary::periodic) {
    return (v[(i + 1) % g] - v[(i - 1 + g) % g]) / (2.0 * ds);
  }
  if (i == 0) return (v[1] - v[0]) / ds;
  if (i == g - 1) return (v[g - 1] - v[g - 2]) / ds;
  return (v[i + 1] - v[i - 1]) / (2.0 * ds);
}

// d_t tau at every node; dt enters only through the Lax-Friedrichs average.
std::vector<double> tau_rate(const TauField& field, const FlowFunctional& F, Scheme scheme, double dt) {
  const int n = field.n;
  const int g = field.grid.nodes;
  const int top = std::max(2 * n - 2, n);
  const double ds = field.grid.spacing();

  // Node-wise arrays of tau_0..tau_top and f_0..f_{n-1}.
  std::vector<std::vector<double>> ext(top + 1, std::vector<double>(g));
  std::vector<std::vector<double>> f(n, std::vector<double>(g));
  std::vector<double> speed(g);
  for (int k = 0; k < g; ++k) {
    const std::span<const double> tau(field.tau.data() + static_cast<std::size_t>(k) * n, n);
    const auto e = extended_powers(tau, n, top);
    for (int m = 0; m <= top; ++m) ext[m][k] = e[m];
    for (int j = 0; j < n; ++j) f[j][k] = F.coefficient(j, tau);
    if (scheme == Scheme::upwind) speed[k] = speed_bound(tau, F);
  }

  std::vector<double> rate(field.tau.size());
  for (int k = 0; k < g; ++k) {
    for (int i = 1; i <= n; ++i) {
      double brace = ext[i - 1][k] * ds_derivative(f[0], field.grid, k);
      for (int j = 1; j < n; ++j) {
        brace += j * f[j][k] / (i + j - 1) * ds_derivative(ext[i + j - 1], field.grid, k) +
                 ext[i + j - 1][k] * ds_derivative(f[j], field.grid, k);
      }
      rate[static_cast<std::size_t>(k * n + i - 1)] = -0.5 * i * brace;
    }
  }

  auto neighbour = [&](int k, int i, int offset) {
    int m = k + offset;
    if (field.grid.boundary == Boundary::periodic) {
      m = ((m % g) + g) % g;
    } else {
      m = std::clamp(m, 0, g - 1);
    }
    return field.at(m, i);
  };
  auto neighbour_index = [&](int k, int offset) {
    const int m = k + offset;
    return field.grid.boundary == Boundary::periodic ? ((m % g) + g) % g : std::clamp(m, 0, g - 1);
  };

  for (int k = 0; k < g; ++k) {
    double alpha = 0.0;
    if (scheme == Scheme::upwind) {
      alpha = std::max({speed[neighbour_index(k, -1)], speed[k], speed[neighbour_index(k, 1)]});
    }
    for (int i = 1; i <= n; ++i) {
      const double lap = neighbour(k, i, 1) - 2.0 * field.at(k, i) + neighbour(k, i, -1);
      auto& r = rate[static_cast<std::size_t>(k * n + i - 1)];
      if (scheme == Scheme::upwind) {
        r += 0.5 * alpha * lap / ds;
      } else {
        r += 0.5 * lap / dt;
      }
    }
  }
  return rate;
}

}  // namespace

double tau_time_step(const TauField& f, const FlowFunctional& F, const StepControl& ctl) {
  double speed = 0.0;
  for (int k = 0; k < f.grid.nodes; ++k) {
    const std::span<const double> tau(f.tau.data() + static_cast<std::size_t>(k) * f.n, f.n);
    speed = std::max(speed, speed_bound(tau, F));
  }
  if (speed == 0.0) return kInf;
  return ctl.cfl * f.grid.spacing() / speed;
}

TauField step_tau_system(const TauField& f, const FlowFunctional& F, const StepControl& ctl) {
  if (F.n() != f.n) throw ValidationError("step_tau_system: functional and field dimensions differ");
  const double remaining = ctl.t_end - f.t;
  TauField next = f;
  if (remaining <= 0.0) return next;
  double dt = tau_time_step(f, F, ctl);
  const bool last = dt >= remaining;
  if (last) dt = remaining;

  const auto r1 = tau_rate(f, F, ctl.scheme, dt);
  for (std::size_t i = 0; i < next.tau.size(); ++i) next.tau[i] = f.tau[i] + dt * r1[i];
  if (ctl.integrator == Integrator::heun) {
    require_finite(next.tau, f.t, "step_tau_system");
    const auto r2 = tau_rate(next, F, ctl.scheme, dt);
    for (std::size_t i = 0; i < next.tau.size(); ++i) next.tau[i] = 0.5 * (f.tau[i] + next.tau[i] + dt * r2[i]);
  }
  require_finite(next.tau, f.t, "step_tau_system");
  next.t = last ? ctl.t_end : f.t + dt;
  return next;
}

TauRun evolve_tau_system(const TauField& f0, const FlowFunctional& F, const StepControl& ctl, const TauHook& hook) {
  f0.validate();
  ctl.validate();
  TauRun run{f0, 0};
  if (hook) hook(run.field, 0);
  std::vector<double> tv0(static_cast<std::size_t>(f0.n));
  for (int i = 1; i <= f0.n; ++i) tv0[i - 1] = total_variation(f0.component(i), f0.grid.boundary);
  while (run.field.t < ctl.t_end) {
    if (run.steps >= ctl.max_steps) {
      std::ostringstream os;
      os << "evolve_tau_system: max_steps = " << ctl.max_steps << " exhausted at t = " << run.field.t;
      throw ProgressError(os.str(), run.field.t);
    }
    const double t_prev = run.field.t;
    run.field = step_tau_system(run.field, F, ctl);
    ++run.steps;
    for (int i = 1; i <= f0.n; ++i) {
      const double tv = total_variation(run.field.component(i), f0.grid.boundary);
      if (tv0[i - 1] > 0.0 && tv > 10.0 * tv0[i - 1]) {
        std::ostringstream os;
        os << "evolve_tau_system: total variation of tau_" << i << " grew tenfold; last valid t = " << t_prev;
        throw BlowUpError(os.str(), t_prev);
      }
    }
    if (hook) hook(run.field, run.steps);
  }
  return run;
}

NormalizedRicciStep normalized_ricci_step(const UmbilicalProfile& p, const StepControl& ctl,
                                          const NormalizedRicciOptions& opts) {
  // psi = -2 sigma_2 = -2 lambda^2 on an umbilical two-dimensional leaf.
  static const FlowFunctional ricci(
      2,
      {{"f0 = -(tau1^2 - tau2)", [](std::span<const double> t) { return -(t[0] * t[0] - t[1]); }},
       {"", [](std::span<const double>) { return 0.0; }}},
      "ext_ricci");

  NormalizedRicciStep out;
  out.profile = step_umbilical(p, ricci, ctl);
  out.dt = out.profile.t - p.t;

  const auto w = p.grid.weights();
  const auto& lam = out.profile.lambda;
  double vol = 0.0;
  double scalar = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double dv = w[i] * p.phi[i] * p.phi[i];
    vol += dv;
    scalar += dv * 2.0 * lam[i] * lam[i];
  }
  const double mean_scalar = scalar / vol;
  out.rho = (opts.literal_rho_sign ? -2.0 : 2.0) * mean_scalar;

  double integral = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double rate = -2.0 * lam[i] * lam[i] + 0.5 * out.rho;
    integral += w[i] * p.phi[i] * p.phi[i] * rate;
    out.max_conformal_rate = std::max(out.max_conformal_rate, std::abs(rate));
    out.profile.phi[i] = p.phi[i] * std::exp(0.5 * out.dt * rate);
  }
  out.normalization_integral = integral;
  require_finite(out.profile.phi, p.t, "normalized_ricci_step");
  return out;
}

}  // namespace egf
