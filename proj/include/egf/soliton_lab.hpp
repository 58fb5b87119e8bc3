#pragma once

// Static checks of extrinsic geometric soliton structures h(b) = eps g + L_X g
// for umbilical profiles, biregular surface grids and the extrinsic Ricci
// soliton spectrum.

#include <optional>
#include <string>
#include <vector>

#include "egf/flow_engine.hpp"
#include "egf/sym_curvature.hpp"

namespace egf {

enum class Verdict { soliton, not_soliton, degenerate };

const char* to_string(Verdict v);

struct ResidualNorm {
  std::string equation;
  double linf = 0.0;
  double l2 = 0.0;
};

struct SolitonReport {
  std::vector<ResidualNorm> residuals;
  double eps_used = 0.0;
  double n_lambda_norm = 0.0;  // max |d_s lambda|
  double tol = 0.0;
  Verdict verdict = Verdict::not_soliton;
  std::vector<std::string> notes;

  double max_residual() const;
};

/// mu = -(n/2)(psi(lambda) - psi(0))/lambda, and -(n/2) psi'(0) for |lambda| < 1e-8.
/// Affine catalog functionals use the exact slope.
double mu_of_lambda(const FlowFunctional& F, double lambda);

/// |mu(+-1e-8) - mu(0)|, the C^1 continuity defect at the branch switch.
double mu_continuity_defect(const FlowFunctional& F);

/// Default tolerance for grid data: max(1e-8, 10 ds^2).
double grid_tolerance(double spacing);

/// Normal soliton X = mu N on an umbilical profile. eps = nullopt selects psi(0).
/// The verdict needs both the residual psi - eps + (2/n) mu lambda and
/// max |d_s lambda| to be within tol.
SolitonReport check_normal_soliton(const UmbilicalProfile& p, const FlowFunctional& F,
                                   std::optional<double> eps = std::nullopt,
                                   std::optional<double> tol = std::nullopt);

/// Surface metric g = g00 dx0^2 + g11 dx1^2 in biregular foliated
/// coordinates, sampled on a uniform grid with optional field X = X0 d0 + X1 d1.
struct BiregularGrid {
  int nx0 = 8;
  int nx1 = 8;
  double length0 = 1.0;
  double length1 = 1.0;
  bool periodic0 = false;
  bool periodic1 = true;
  std::vector<double> g00;  // nx0 * nx1, index i0 * nx1 + i1
  std::vector<double> g11;
  std::vector<double> x0_field;  // empty means zero
  std::vector<double> x1_field;

  void validate() const;
  double spacing0() const { return periodic0 ? length0 / nx0 : length0 / (nx0 - 1); }
  double spacing1() const { return periodic1 ? length1 / nx1 : length1 / (nx1 - 1); }
  std::size_t index(int i0, int i1) const { return static_cast<std::size_t>(i0) * nx1 + i1; }
};

/// Normal curvature lambda = -(1/(2 sqrt g00)) d0 log g11 at every node.
std::vector<double> biregular_lambda(const BiregularGrid& g);

/// Residuals R1: psi(lambda) - eps - (2 d1X1 g11 + X0 d0g11 + X1 d1g11),
/// R2: d1X0, R3: d0X1, R4: d0X0 + X(log g00)/2. tol defaults to 10 max(ds)^2.
SolitonReport check_biregular_surface(const BiregularGrid& g, const FlowFunctional& F, double eps,
                                      std::optional<double> tol = std::nullopt);

/// tr h(b) - n eps - 2 divX.
double check_trace_identity(const PrincipalCurvatureSpectrum& spec, const FlowFunctional& F, double eps,
                            double div_x);

/// eps = (sum w_i trace_i / sum w_i) / n.
double estimate_eps_leaf(const std::vector<double>& trace_samples, const std::vector<double>& weights, int n);

struct ConformalKillingReport {
  std::vector<double> mu;  // psi(lambda) - eps per node
  bool killing = false;    // mu == 0
  bool homothety = false;  // mu constant
};

ConformalKillingReport conformal_killing_factor(const UmbilicalProfile& p, const FlowFunctional& F, double eps,
                                                double tol = 1e-12);

/// One admissible spectrum of k(k - tau1) = r with n1 curvatures equal to k1
/// and n2 equal to k2. Umbilical spectra have n2 == 0.
struct AdmissibleSpectrum {
  double k1 = 0.0;
  double k2 = 0.0;
  int n1 = 0;
  int n2 = 0;

  std::vector<double> expand() const;
};

struct SpectrumClassification {
  int n = 0;
  double tau1 = 0.0;
  double r = 0.0;
  double discriminant = 0.0;     // tau1^2 + 4 r
  std::vector<double> roots;     // empty, one or two roots of k^2 - tau1 k - r
  std::optional<double> n2_minus_n1;  // (n-2) tau1 / sqrt(disc) when two roots
  std::vector<AdmissibleSpectrum> spectra;
  bool cpc = false;  // admissible spectra exist: <= 2 constant principal curvatures
};

/// Spectra compatible with an extrinsic Ricci soliton whose field is
/// leaf-wise conformal Killing, for n >= 3.
SpectrumClassification classify_ricci_soliton(int n, double tau1, double r);

}  // namespace egf
