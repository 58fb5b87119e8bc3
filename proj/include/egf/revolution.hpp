#pragma once

// Profile curves of hypersurfaces of revolution x1 = f(x0) about the x0-axis:
// induced metric, arclength reparameterization, the constant-lambda profile
// (ODE and closed form), sectional curvature, and the cone flow check.

#include <vector>

#include "egf/flow_engine.hpp"

namespace egf {

enum class ProfileKind { cone, constant_lambda, user };

const char* to_string(ProfileKind k);

/// A parameterized profile curve (axis(p), radius(p)) with radius > 0.
/// Graph profiles use p = x0, so axis_d == 1.
struct RevolutionProfile {
  std::vector<double> param;
  std::vector<double> axis;      // x0
  std::vector<double> radius;    // x1 = f
  std::vector<double> axis_d;    // d x0 / dp
  std::vector<double> radius_d;  // d x1 / dp
  ProfileKind kind = ProfileKind::user;
  double beta = 0.0;  // cone half-angle
  double C = 0.0;     // additive constant of the constant-lambda closed form

  void validate() const;
  std::size_t size() const noexcept { return param.size(); }
};

RevolutionProfile graph_profile(std::vector<double> x0, std::vector<double> f, std::vector<double> fprime,
                                ProfileKind kind = ProfileKind::user);

/// Line x1 = tan(beta) x0 sampled at x0.
RevolutionProfile cone_profile(double beta, const std::vector<double>& x0);

struct MetricSample {
  double g00 = 0.0;
  double g11 = 0.0;
};

/// g00 = (dx0/dp)^2 + (dx1/dp)^2, g11 = x1^2; for graphs g00 = 1 + f'^2.
std::vector<MetricSample> profile_metric(const RevolutionProfile& p);

/// Resamples the curve uniformly in arclength (same sample count) using the
/// cubic Hermite interpolant of the samples; the new parameter starts at 0.
RevolutionProfile reparameterize_arclength(const RevolutionProfile& p);

/// x0 = log((w - 2)/(w + 2)) + w + C with w = sqrt(4 + x1^2).
double closed_form_gamma(double x1, double C);

/// Classic RK4 in x1 of dx0/dx1 = sqrt(4 + x1^2)/x1 from x1_start to x1_end,
/// starting on the closed form. The step is shrunk to divide the interval.
RevolutionProfile integrate_constant_lambda(double x1_start, double x1_end, double step, double C);

/// K(d0, d1) = -1 / (x1^2 + 2)^2.
double sectional_curvature_profile(double x1);

/// Normal curvature of the parallel through a graph point, f' / (f sqrt(1 + f'^2)).
double parallel_normal_curvature(double f, double fprime);

struct CurvatureRow {
  double x0 = 0.0;
  double x1 = 0.0;
  double g00 = 0.0;
  double g11 = 0.0;
  double lambda = 0.0;
  double k_formula = 0.0;
  double k_oracle = 0.0;  // -f'' / (f (1 + f'^2)^2) from second differences
};

/// Curvature table of a profile sampled uniformly in x1 (as produced by
/// integrate_constant_lambda); derivatives come from the sampled x0 only.
std::vector<CurvatureRow> curvature_table(const RevolutionProfile& p);

struct ConeFlowReport {
  double beta = 0.0;
  double t_end = 0.0;
  double a = 0.0;
  double b = 0.0;
  int nodes = 0;
  long steps = 0;
  double lambda_sup_error = 0.0;        // vs -2 / (x0 - t/2)
  double phi_sup_error = 0.0;           // vs sin(beta) (x0 - t/2)^2 / x0, the exp-integral of the exact lambda
  double phi_translated_cone_gap = 0.0;  // vs (x0 - t/2) sin(beta)
  UmbilicalProfile final_profile;
};

/// Evolves lambda0 = -2/x0 on [a, b] with psi(lambda) = lambda and exact
/// inflow at x0 = a. Rejects a <= t_end / 2 (apex inside the domain).
ConeFlowReport cone_flow_check(double beta, double t_end, double a, double b, int nodes, StepControl ctl = {});

}  // namespace egf
