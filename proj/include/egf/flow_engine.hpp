#pragma once

// Explicit time stepping of curvature data along one arclength-parameterized
// N-curve. N(.) is the arclength derivative d/ds on a uniform grid.
//
//   umbilical law:  d_t lambda + 1/2 d_s psi(lambda) = 0
//   tau system:     d_t tau_i + (i/2){ tau_{i-1} N(f_0)
//                     + sum_{j>=1} [ j f_j/(i+j-1) N(tau_{i+j-1}) + tau_{i+j-1} N(f_j) ] } = 0
//   warping:        phi_t = phi_0 exp(1/2 int_0^t psi(lambda) dt)

#include <functional>
#include <span>
#include <vector>

#include "egf/sym_curvature.hpp"

namespace egf {

enum class Boundary { periodic, transmissive };
enum class Scheme { upwind, lax_friedrichs };
enum class Integrator { euler, heun };

/// Uniform arclength grid on [origin, origin + length]. Periodic grids omit
/// the right endpoint (spacing length / nodes), transmissive grids include
/// it (spacing length / (nodes - 1)).
struct CurveGrid {
  double origin = 0.0;
  double length = 1.0;
  int nodes = 64;
  Boundary boundary = Boundary::periodic;

  void validate() const;
  double spacing() const;
  double node(int i) const { return origin + i * spacing(); }
  std::vector<double> positions() const;
  /// Quadrature weights: uniform for periodic grids, trapezoidal otherwise.
  std::vector<double> weights() const;
};

struct UmbilicalProfile {
  CurveGrid grid;
  std::vector<double> lambda;  // normal curvature per node
  std::vector<double> phi;     // warping factor per node, > 0
  double t = 0.0;

  void validate() const;
};

/// Profile with lambda sampled from a function of arclength and phi = 1.
UmbilicalProfile make_profile(const CurveGrid& grid, const std::function<double(double)>& lambda0);

struct TauField {
  CurveGrid grid;
  int n = 1;
  std::vector<double> tau;  // nodes x n, row-major: tau[node * n + (i - 1)] = tau_i
  double t = 0.0;

  void validate() const;
  double at(int node, int i) const { return tau[static_cast<std::size_t>(node * n + i - 1)]; }
  double& at(int node, int i) { return tau[static_cast<std::size_t>(node * n + i - 1)]; }
  std::vector<double> component(int i) const;
};

/// Umbilical power sums tau_j = n lambda^j at each node.
TauField make_umbilical_tau_field(const CurveGrid& grid, int n, std::span<const double> lambda);

struct StepControl {
  double cfl = 0.5;
  Scheme scheme = Scheme::upwind;
  Integrator integrator = Integrator::euler;
  double t_end = 1.0;
  long max_steps = 1'000'000;
  /// Permits cfl > 1; only used by stability scans.
  bool allow_supercritical = false;

  void validate() const;
};

/// Ghost-node values for transmissive boundaries as functions of (s, t).
/// An empty callback means constant extrapolation of the boundary node.
struct InflowData {
  std::function<double(double, double)> left;
  std::function<double(double, double)> right;
};

/// Largest stable step for the umbilical law, or +inf when every speed vanishes.
double umbilical_time_step(const UmbilicalProfile& p, const FlowFunctional& F, const StepControl& ctl);

/// One explicit step, clamped so that t does not pass ctl.t_end. phi is left
/// untouched; it is reconstructed from the lambda history by evolve_warping.
/// Throws BlowUpError when a non-finite value appears.
UmbilicalProfile step_umbilical(const UmbilicalProfile& p, const FlowFunctional& F, const StepControl& ctl,
                                const InflowData& inflow = {});

struct Snapshot {
  double t = 0.0;
  std::vector<double> lambda;
};

struct UmbilicalRun {
  UmbilicalProfile profile;    // final state, phi reconstructed
  std::vector<Snapshot> history;  // every step, including t = 0
  long steps = 0;
};

using ProfileHook = std::function<void(const UmbilicalProfile&, long step)>;

/// Steps to ctl.t_end. The hook sees the initial profile (step 0) and every
/// later state; phi seen by the hook is the running reconstruction.
/// Throws BlowUpError (non-finite values, or total variation above 10x its
/// initial value) and ProgressError (max_steps exhausted).
UmbilicalRun evolve_umbilical(const UmbilicalProfile& p0, const FlowFunctional& F, const StepControl& ctl,
                              const InflowData& inflow = {}, const ProfileHook& hook = {});

/// phi_t = phi_0 exp(1/2 int psi(lambda) dt), trapezoidal in time.
std::vector<double> evolve_warping(std::span<const Snapshot> history, const UmbilicalProfile& p0,
                                   const FlowFunctional& F);

/// Method-of-characteristics solution lambda_t(s) = lambda0(s0) with
/// s = s0 + 1/2 psi'(lambda0(s0)) t. lambda0 must be defined on the whole
/// real line (periodic grids wrap the argument). Throws ShockError once the
/// foot map s0 -> s stops being monotone.
std::vector<double> characteristics_oracle(const std::function<double(double)>& lambda0, const CurveGrid& grid,
                                           double t, const FlowFunctional& F);

double tau_time_step(const TauField& f, const FlowFunctional& F, const StepControl& ctl);

TauField step_tau_system(const TauField& f, const FlowFunctional& F, const StepControl& ctl);

struct TauRun {
  TauField field;
  long steps = 0;
};

using TauHook = std::function<void(const TauField&, long step)>;

TauRun evolve_tau_system(const TauField& f0, const FlowFunctional& F, const StepControl& ctl,
                         const TauHook& hook = {});

struct NormalizedRicciOptions {
  /// Use the sign of rho printed with the normalized flow definition instead
  /// of the one that keeps extrinsic Einstein data fixed.
  bool literal_rho_sign = false;
};

struct NormalizedRicciStep {
  UmbilicalProfile profile;
  double dt = 0.0;
  double rho = 0.0;
  /// sum_i w_i phi_i^2 (-2 lambda_i^2 + rho/2) over the profile.
  double normalization_integral = 0.0;
  /// max_i |d_t log phi_i^2| applied in this step.
  double max_conformal_rate = 0.0;
};

/// One coupled step of the n = 2 normalized extrinsic Ricci flow: lambda by
/// the umbilical law with psi = -2 lambda^2, then phi by
/// d_t log phi^2 = -2 lambda^2 + rho/2 with rho = 2 <R^ex>_{phi^2 ds}.
NormalizedRicciStep normalized_ricci_step(const UmbilicalProfile& p, const StepControl& ctl,
                                          const NormalizedRicciOptions& opts = {});

double total_variation(std::span<const double> v, Boundary boundary);

}  // namespace egf
