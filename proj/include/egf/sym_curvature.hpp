#pragma once

// Principal-frame algebra of a codimension-one foliation: power sums,
// elementary symmetric functions, the flow tensor h(b) and extrinsic Ricci
// quantities. Every routine works on the spectrum k_1..k_n of the Weingarten
// operator; no general (non-diagonal) operators are represented.
//
// Convention: tau_0 = n (trace of the identity on the leaf).

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace egf {

/// Identity tolerance used across the library: relative 1e-10, absolute 1e-12.
inline constexpr double kRelTol = 1e-10;
inline constexpr double kAbsTol = 1e-12;

bool nearly_equal(double a, double b, double rel = kRelTol, double abs = kAbsTol);

/// Eigenvalues k_1..k_n of the Weingarten operator at a point (units 1/length).
class PrincipalCurvatureSpectrum {
 public:
  explicit PrincipalCurvatureSpectrum(std::vector<double> k);

  /// Totally umbilical spectrum (lambda, ..., lambda).
  static PrincipalCurvatureSpectrum umbilical(int n, double lambda);

  int n() const noexcept { return static_cast<int>(k_.size()); }
  std::span<const double> k() const noexcept { return k_; }
  double operator[](int i) const { return k_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<double> k_;
};

/// Power sums and mean curvatures of one spectrum, tied by the Newton identities.
struct SymmetricInvariants {
  int n = 0;
  std::vector<double> tau;    // tau_1..tau_m, m >= n
  std::vector<double> sigma;  // sigma_1..sigma_n

  /// Largest scaled residual of both Newton recurrences over the stored range.
  double newton_residual() const;
  bool consistent() const { return newton_residual() <= kRelTol; }
};

/// tau_j = sum_i k_i^j for j = 1..m.
std::vector<double> power_sums(const PrincipalCurvatureSpectrum& spec, int m);

/// sigma_1..sigma_n from tau_1..tau_n by the first Newton recurrence.
std::vector<double> elementary_from_power(std::span<const double> tau, int n);

/// tau_{n+1}..tau_m from the second Newton recurrence.
/// Throws ValidationError when (tau, sigma) violate the first recurrence.
std::vector<double> extend_power(std::span<const double> tau, std::span<const double> sigma, int m);

/// Same recurrence without the consistency check; used on hot paths where
/// sigma was just computed from tau.
std::vector<double> extend_power_unchecked(std::span<const double> tau, std::span<const double> sigma,
                                           int m);

SymmetricInvariants symmetric_invariants(const PrincipalCurvatureSpectrum& spec, int m);

/// Coefficient function f_j(tau_1..tau_n) of the flow tensor, with a tag for reports.
struct FlowCoefficient {
  std::string tag;
  std::function<double(std::span<const double>)> eval;
};

/// h(b) = sum_{j<n} f_j(tau) b_j. Holds exactly n coefficients f_0..f_{n-1}.
class FlowFunctional {
 public:
  FlowFunctional(int n, std::vector<FlowCoefficient> f, std::string name = {});

  int n() const noexcept { return n_; }
  const std::string& name() const noexcept { return name_; }
  const std::vector<FlowCoefficient>& coefficients() const noexcept { return f_; }

  /// f_j(tau); tau must hold at least n entries.
  double coefficient(int j, std::span<const double> tau) const;
  std::string describe() const;

  /// Set by the catalog when psi(lambda) is affine in lambda.
  std::optional<double> affine_slope() const noexcept { return slope_; }
  void set_affine_slope(double a) { slope_ = a; }

 private:
  int n_;
  std::vector<FlowCoefficient> f_;
  std::string name_;
  std::optional<double> slope_;
};

/// Scalar speed of the umbilical reduction: sum_j f_j(n l, n l^2, ..., n l^n) l^j.
double psi_of_lambda(const FlowFunctional& F, double lambda);

/// psi'(lambda) by central difference with step 1e-6 * max(1, |lambda|).
double psi_prime(const FlowFunctional& F, double lambda);

/// Eigenvalues h_i = sum_j f_j(tau) k_i^j of h(b) in the principal frame.
std::vector<double> assemble_h_eigen(const PrincipalCurvatureSpectrum& spec, const FlowFunctional& F);

/// Spectrum of the conformally changed metric: k_i - c, where c plays the role of N(phi).
PrincipalCurvatureSpectrum conformal_shift(const PrincipalCurvatureSpectrum& spec, double c);

/// Eigenvalues tau_1 k_i - k_i^2 of Ric^ex = tau_1 b_1 - b_2.
std::vector<double> extrinsic_ricci_eigen(const PrincipalCurvatureSpectrum& spec);

/// R^ex = tau_1^2 - tau_2; checked against 2 sigma_2.
double extrinsic_scalar(const PrincipalCurvatureSpectrum& spec);

struct RicciFlatVerdict {
  bool flat = false;
  bool totally_geodesic = false;  // only meaningful when flat
  double max_ricci = 0.0;
  double max_curvature = 0.0;
};

RicciFlatVerdict classify_extrinsic_ricci_flat(const PrincipalCurvatureSpectrum& spec, double tol);

}  // namespace egf
