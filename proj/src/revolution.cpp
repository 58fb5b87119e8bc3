#include "egf/revolution.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "egf/errors.hpp"
#include "egf/functionals.hpp"

namespace egf {

namespace {

// Cubic Hermite segment between samples k and k+1, local t in [0, 1].
struct HermiteSegment {
  double h;
  double y0, y1, d0, d1;  // values and derivatives w.r.t. the parameter

  double value(double t) const {
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * d1;
  }
  // d/dp (not d/dt)
  double slope(double t) const {
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * h * d0 + (-6 * t2 + 6 * t) * y1 + (3 * t2 - 2 * t) * h * d1) / h;
  }
};

struct CurveSegment {
  HermiteSegment axis;
  HermiteSegment radius;

  double speed(double t) const { return std::hypot(axis.slope(t), radius.slope(t)); }

  // Arclength over local [0, t] by 5-point Gauss-Legendre.
  double arclength(double t) const {
    static constexpr std::array<double, 5> x = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                                0.9061798459386640};
    static constexpr std::array<double, 5> w = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                                0.4786286704993665, 0.2369268850561891};
    double acc = 0.0;
    for (int i = 0; i < 5; ++i) acc += w[i] * speed(0.5 * t * (x[i] + 1.0));
    return 0.5 * t * acc * axis.h;
  }
};

CurveSegment segment(const RevolutionProfile& p, std::size_t k) {
  const double h = p.param[k + 1] - p.param[k];
  return {{h, p.axis[k], p.axis[k + 1], p.axis_d[k], p.axis_d[k + 1]},
          {h, p.radius[k], p.radius[k + 1], p.radius_d[k], p.radius_d[k + 1]}};
}

// Second-order first and second derivatives of uniformly spaced samples.
void uniform_derivatives(const std::vector<double>& y, double h, std::vector<double>& d1, std::vector<double>& d2) {
  const std::size_t n = y.size();
  d1.resize(n);
  d2.resize(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    d1[i] = (y[i + 1] - y[i - 1]) / (2 * h);
    d2[i] = (y[i + 1] - 2 * y[i] + y[i - 1]) / (h * h);
  }
  d1[0] = (-3 * y[0] + 4 * y[1] - y[2]) / (2 * h);
  d1[n - 1] = (3 * y[n - 1] - 4 * y[n - 2] + y[n - 3]) / (2 * h);
  d2[0] = (2 * y[0] - 5 * y[1] + 4 * y[2] - y[3]) / (h * h);
  d2[n - 1] = (2 * y[n - 1] - 5 * y[n - 2] + 4 * y[n - 3] - y[n - 4]) / (h * h);
}

}  // namespace

const char* to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::cone:
      return "cone";
    case ProfileKind::constant_lambda:
      return "constant_lambda";
    case ProfileKind::user:
      return "user";
  }
  return "unknown";
}

void RevolutionProfile::validate() const {
  const std::size_t n = param.size();
  if (n < 4) throw ValidationError("revolution profile: at least 4 samples required");
  if (axis.size() != n || radius.size() != n || axis_d.size() != n || radius_d.size() != n) {
    throw ValidationError("revolution profile: sample arrays differ in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(radius[i] > 0.0)) throw ValidationError("revolution profile: radius f must be positive");
    if (i > 0 && !(param[i] > param[i - 1])) throw ValidationError("revolution profile: parameter must be strictly increasing");
  }
}

RevolutionProfile graph_profile(std::vector<double> x0, std::vector<double> f, std::vector<double> fprime,
                                ProfileKind kind) {
  RevolutionProfile p;
  p.param = x0;
  p.axis = std::move(x0);
  p.radius = std::move(f);
  p.radius_d = std::move(fprime);
  p.axis_d.assign(p.axis.size(), 1.0);
  p.kind = kind;
  p.validate();
  return p;
}

RevolutionProfile cone_profile(double beta, const std::vector<double>& x0) {
  if (!(beta > 0.0 && beta < 0.5 * std::numbers::pi)) throw ValidationError("cone: beta must lie in (0, pi/2)");
  const double slope = std::tan(beta);
  std::vector<double> f(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) f[i] = slope * x0[i];
  auto p = graph_profile(x0, std::move(f), std::vector<double>(x0.size(), slope), ProfileKind::cone);
  p.beta = beta;
  return p;
}

std::vector<MetricSample> profile_metric(const RevolutionProfile& p) {
  p.validate();
  std::vector<MetricSample> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    g[i] = {p.axis_d[i] * p.axis_d[i] + p.radius_d[i] * p.radius_d[i], p.radius[i] * p.radius[i]};
  }
  return g;
}

RevolutionProfile reparameterize_arclength(const RevolutionProfile& p) {
  p.validate();
  const std::size_t n = p.size();
  std::vector<CurveSegment> segs;
  std::vector<double> cumulative(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    segs.push_back(segment(p, k));
    cumulative[k + 1] = cumulative[k] + segs.back().arclength(1.0);
  }
  const double total = cumulative.back();
  if (!(total > 0.0)) throw ValidationError("reparameterize_arclength: curve has zero length");

  RevolutionProfile out = p;
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = i + 1 == n ? total : total * static_cast<double>(i) / static_cast<double>(n - 1);
    while (k + 2 < n && cumulative[k + 1] < s) ++k;
    const auto& seg = segs[k];
    const double target = s - cumulative[k];
    // Arclength is increasing in t; bisection on the segment.
    double lo = 0.0, hi = 1.0;
    if (target <= 0.0) {
      hi = 0.0;
    } else if (target >= cumulative[k + 1] - cumulative[k]) {
      lo = 1.0;
    } else {
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (seg.arclength(mid) < target ? lo : hi) = mid;
      }
    }
    const double t = 0.5 * (lo + hi);
    const double speed = seg.speed(t);
    out.param[i] = s;
    out.axis[i] = seg.axis.value(t);
    out.radius[i] = seg.radius.value(t);
    out.axis_d[i] = seg.axis.slope(t) / speed;
    out.radius_d[i] = seg.radius.slope(t) / speed;
  }
  out.validate();
  return out;
}

double closed_form_gamma(double x1, double C) {
  if (!(x1 > 0.0)) throw ValidationError("closed_form_gamma: x1 must be positive");
  const double w = std::sqrt(4.0 + x1 * x1);
  return std::log((w - 2.0) / (w + 2.0)) + w + C;
}

RevolutionProfile integrate_constant_lambda(double x1_start, double x1_end, double step, double C) {
  if (!(x1_start > 0.0)) throw ValidationError("integrate_constant_lambda: x1_start must be positive (log singularity at 0)");
  if (!(x1_end > x1_start)) throw ValidationError("integrate_constant_lambda: x1_end must exceed x1_start");
  if (!(step > 0.0)) throw ValidationError("integrate_constant_lambda: step must be positive");
  const auto steps = static_cast<std::size_t>(std::ceil((x1_end - x1_start) / step - 1e-9));
  const double h = (x1_end - x1_start) / static_cast<double>(steps);
  auto rhs = [](double x1) { return std::sqrt(4.0 + x1 * x1) / x1; };

  std::vector<double> x0(steps + 1), x1(steps + 1), fprime(steps + 1);
  x1[0] = x1_start;
  x0[0] = closed_form_gamma(x1_start, C);
  for (std::size_t i = 0; i < steps; ++i) {
    const double a = x1[i];
    const double k1 = rhs(a);
    const double k2 = rhs(a + 0.5 * h);
    const double k3 = rhs(a + 0.5 * h);
    const double k4 = rhs(a + h);
    x0[i + 1] = x0[i] + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    x1[i + 1] = i + 1 == steps ? x1_end : x1_start + h * static_cast<double>(i + 1);
  }
  for (std::size_t i = 0; i <= steps; ++i) fprime[i] = x1[i] / std::sqrt(4.0 + x1[i] * x1[i]);
  auto p = graph_profile(std::move(x0), std::move(x1), std::move(fprime), ProfileKind::constant_lambda);
  p.C = C;
  return p;
}

double sectional_curvature_profile(double x1) {
  const double d = x1 * x1 + 2.0;
  return -1.0 / (d * d);
}

double parallel_normal_curvature(double f, double fprime) {
  return fprime / (f * std::sqrt(1.0 + fprime * fprime));
}

std::vector<CurvatureRow> curvature_table(const RevolutionProfile& p) {
  p.validate();
  const std::size_t n = p.size();
  if (n < 5) throw ValidationError("curvature_table: at least 5 samples required");
  const double h = (p.radius.back() - p.radius.front()) / static_cast<double>(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs((p.radius[i] - p.radius[i - 1]) - h) > 1e-9 * std::abs(h)) {
      throw ValidationError("curvature_table: samples must be uniform in x1");
    }
  }
  std::vector<double> dx0, ddx0;
  uniform_derivatives(p.axis, h, dx0, ddx0);
  const auto metric = profile_metric(p);

  std::vector<CurvatureRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = p.radius[i];
    // Inverse-function derivatives: f' = 1/x0', f'' = -x0''/x0'^3.
    const double fp = 1.0 / dx0[i];
    const double fpp = -ddx0[i] / (dx0[i] * dx0[i] * dx0[i]);
    const double q = 1.0 + fp * fp;
    rows[i] = {p.axis[i],
               f,
               metric[i].g00,
               metric[i].g11,
               parallel_normal_curvature(f, p.radius_d[i]),
               sectional_curvature_profile(f),
               -fpp / (f * q * q)};
  }
  return rows;
}

ConeFlowReport cone_flow_check(double beta, double t_end, double a, double b, int nodes, StepControl ctl) {
  if (!(beta > 0.0 && beta < 0.5 * std::numbers::pi)) throw ValidationError("cone_flow_check: beta must lie in (0, pi/2)");
  if (!(b > a)) throw ValidationError("cone_flow_check: domain must satisfy a < b");
  if (!(t_end >= 0.0)) throw ValidationError("cone_flow_check: t_end must be >= 0");
  if (!(a > 0.5 * t_end)) {
    std::ostringstream os;
    os << "cone_flow_check: apex enters the domain (a = " << a << " <= t_end/2 = " << 0.5 * t_end << ")";
    throw ValidationError(os.str());
  }
  CurveGrid grid{a, b - a, nodes, Boundary::transmissive};
  auto p0 = make_profile(grid, [](double x) { return -2.0 / x; });
  const double sb = std::sin(beta);
  for (int i = 0; i < nodes; ++i) p0.phi[i] = grid.node(i) * sb;

  const auto F = make_functional("b1", 2);
  ctl.t_end = t_end;
  InflowData inflow;
  inflow.left = [](double s, double t) { return -2.0 / (s - 0.5 * t); };
  const auto run = evolve_umbilical(p0, F, ctl, inflow);

  ConeFlowReport rep;
  rep.beta = beta;
  rep.t_end = t_end;
  rep.a = a;
  rep.b = b;
  rep.nodes = nodes;
  rep.steps = run.steps;
  const double t = run.profile.t;
  for (int i = 0; i < nodes; ++i) {
    const double x = grid.node(i);
    const double shifted = x - 0.5 * t;
    rep.lambda_sup_error = std::max(rep.lambda_sup_error, std::abs(run.profile.lambda[i] + 2.0 / shifted));
    rep.phi_sup_error = std::max(rep.phi_sup_error, std::abs(run.profile.phi[i] - sb * shifted * shifted / x));
    rep.phi_translated_cone_gap = std::max(rep.phi_translated_cone_gap, std::abs(run.profile.phi[i] - shifted * sb));
  }
  rep.final_profile = run.profile;
  return rep;
}

}  // namespace egf
