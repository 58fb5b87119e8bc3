#include "egf/sym_curvature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "egf/errors.hpp"

namespace egf {

bool nearly_equal(double a, double b, double rel, double abs) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs;
}

PrincipalCurvatureSpectrum::PrincipalCurvatureSpectrum(std::vector<double> k) : k_(std::move(k)) {
  if (k_.empty()) throw ValidationError("spectrum: leaf dimension n must be >= 1");
  for (double v : k_) {
    if (!std::isfinite(v)) throw ValidationError("spectrum: principal curvatures must be finite");
  }
}

PrincipalCurvatureSpectrum PrincipalCurvatureSpectrum::umbilical(int n, double lambda) {
  if (n < 1) throw ValidationError("spectrum: leaf dimension n must be >= 1");
  return PrincipalCurvatureSpectrum(std::vector<double>(static_cast<std::size_t>(n), lambda));
}

namespace {

// Residual of the j-th Newton identity and the magnitude of its terms.
struct NewtonTerm {
  double residual;
  double scale;
};

NewtonTerm newton_first(std::span<const double> tau, std::span<const double> sigma, int j) {
  // tau_j - tau_{j-1} s_1 + ... + (-1)^{j-1} tau_1 s_{j-1} + (-1)^j j s_j
  double r = tau[j - 1];
  double scale = std::abs(tau[j - 1]);
  double sign = -1.0;
  for (int i = 1; i < j; ++i) {
    const double term = tau[j - i - 1] * sigma[i - 1];
    r += sign * term;
    scale += std::abs(term);
    sign = -sign;
  }
  const double last = j * sigma[j - 1];
  r += sign * last;
  scale += std::abs(last);
  return {r, scale};
}

NewtonTerm newton_second(std::span<const double> tau, std::span<const double> sigma, int n, int j) {
  // tau_j - tau_{j-1} s_1 + ... + (-1)^n tau_{j-n} s_n, j > n
  double r = tau[j - 1];
  double scale = std::abs(tau[j - 1]);
  double sign = -1.0;
  for (int i = 1; i <= n; ++i) {
    const int idx = j - i;
    const double tau_idx = idx == 0 ? static_cast<double>(n) : tau[idx - 1];
    const double term = tau_idx * sigma[i - 1];
    r += sign * term;
    scale += std::abs(term);
    sign = -sign;
  }
  return {r, scale};
}

double normalized(const NewtonTerm& t) { return std::abs(t.residual) / (t.scale + kAbsTol / kRelTol); }

}  // namespace

double SymmetricInvariants::newton_residual() const {
  if (n < 1 || static_cast<int>(sigma.size()) < n || static_cast<int>(tau.size()) < n) {
    throw ValidationError("symmetric invariants: need n >= 1, |sigma| = n and |tau| >= n");
  }
  double worst = 0.0;
  for (int j = 1; j <= n; ++j) worst = std::max(worst, normalized(newton_first(tau, sigma, j)));
  for (int j = n + 1; j <= static_cast<int>(tau.size()); ++j) {
    worst = std::max(worst, normalized(newton_second(tau, sigma, n, j)));
  }
  return worst;
}

std::vector<double> power_sums(const PrincipalCurvatureSpectrum& spec, int m) {
  if (m < 1) throw ValidationError("power_sums: m must be >= 1");
  std::vector<double> tau(static_cast<std::size_t>(m), 0.0);
  for (double k : spec.k()) {
    double p = 1.0;
    for (int j = 0; j < m; ++j) {
      p *= k;
      tau[j] += p;
    }
  }
  return tau;
}

std::vector<double> elementary_from_power(std::span<const double> tau, int n) {
  if (n < 1) throw ValidationError("elementary_from_power: n must be >= 1");
  if (static_cast<int>(tau.size()) < n) {
    throw ValidationError("elementary_from_power: need at least n power sums");
  }
  // j s_j = sum_{i=1}^{j} (-1)^{i-1} s_{j-i} tau_i, s_0 = 1
  std::vector<double> sigma(static_cast<std::size_t>(n), 0.0);
  for (int j = 1; j <= n; ++j) {
    double acc = 0.0;
    double sign = 1.0;
    for (int i = 1; i <= j; ++i) {
      const double prev = (j - i == 0) ? 1.0 : sigma[j - i - 1];
      acc += sign * prev * tau[i - 1];
      sign = -sign;
    }
    sigma[j - 1] = acc / j;
  }
  return sigma;
}

std::vector<double> extend_power_unchecked(std::span<const double> tau, std::span<const double> sigma,
                                           int m) {
  const int n = static_cast<int>(sigma.size());
  std::vector<double> all(tau.begin(), tau.begin() + n);
  all.reserve(static_cast<std::size_t>(std::max(m, n)));
  for (int j = n + 1; j <= m; ++j) {
    double acc = 0.0;
    double sign = 1.0;
    for (int i = 1; i <= n; ++i) {
      const int idx = j - i;
      const double tau_idx = idx == 0 ? static_cast<double>(n) : all[idx - 1];
      acc += sign * tau_idx * sigma[i - 1];
      sign = -sign;
    }
    all.push_back(acc);
  }
  return {all.begin() + n, all.end()};
}

std::vector<double> extend_power(std::span<const double> tau, std::span<const double> sigma, int m) {
  const int n = static_cast<int>(sigma.size());
  if (n < 1) throw ValidationError("extend_power: sigma must hold n >= 1 entries");
  if (static_cast<int>(tau.size()) < n) throw ValidationError("extend_power: need tau_1..tau_n");
  if (m <= n) throw ValidationError("extend_power: m must exceed n");
  for (int j = 1; j <= n; ++j) {
    const NewtonTerm t = newton_first(tau, sigma, j);
    if (normalized(t) > kRelTol) {
      std::ostringstream os;
      os << "extend_power: inconsistent invariants, Newton identity j=" << j
         << " has residual " << t.residual << " (term scale " << t.scale << ")";
      throw ValidationError(os.str());
    }
  }
  return extend_power_unchecked(tau, sigma, m);
}

SymmetricInvariants symmetric_invariants(const PrincipalCurvatureSpectrum& spec, int m) {
  const int n = spec.n();
  SymmetricInvariants inv;
  inv.n = n;
  inv.tau = power_sums(spec, std::max(m, n));
  inv.sigma = elementary_from_power(inv.tau, n);
  return inv;
}

FlowFunctional::FlowFunctional(int n, std::vector<FlowCoefficient> f, std::string name)
    : n_(n), f_(std::move(f)), name_(std::move(name)) {
  if (n_ < 1) throw ValidationError("functional: leaf dimension n must be >= 1");
  if (static_cast<int>(f_.size()) != n_) {
    throw ValidationError("functional: expected exactly n coefficients f_0..f_{n-1}");
  }
  for (const auto& c : f_) {
    if (!c.eval) throw ValidationError("functional: coefficient '" + c.tag + "' has no evaluator");
  }
  // At least one f_j must be nonzero somewhere; probe a few fixed tau vectors.
  const double probes[] = {0.0, 1.0, -0.7, 2.3};
  bool nonzero = false;
  std::vector<double> tau(static_cast<std::size_t>(n_));
  for (double p : probes) {
    for (int i = 0; i < n_; ++i) tau[i] = p * (i + 1) + 0.1 * i;
    for (const auto& c : f_) {
      if (c.eval(tau) != 0.0) nonzero = true;
    }
  }
  if (!nonzero) throw ValidationError("functional: all coefficients vanish on the probe set");
}

double FlowFunctional::coefficient(int j, std::span<const double> tau) const {
  return f_[static_cast<std::size_t>(j)].eval(tau.first(static_cast<std::size_t>(n_)));
}

std::string FlowFunctional::describe() const {
  std::ostringstream os;
  if (!name_.empty()) os << name_ << ": ";
  os << "n=" << n_;
  for (int j = 0; j < n_; ++j) {
    if (!f_[j].tag.empty()) os << "; " << f_[j].tag;
  }
  return os.str();
}

double psi_of_lambda(const FlowFunctional& F, double lambda) {
  const int n = F.n();
  std::vector<double> tau(static_cast<std::size_t>(n));
  double p = 1.0;
  for (int j = 0; j < n; ++j) {
    p *= lambda;
    tau[j] = n * p;
  }
  double psi = 0.0;
  double lj = 1.0;
  for (int j = 0; j < n; ++j) {
    psi += F.coefficient(j, tau) * lj;
    lj *= lambda;
  }
  return psi;
}

double psi_prime(const FlowFunctional& F, double lambda) {
  const double h = 1e-6 * std::max(1.0, std::abs(lambda));
  return (psi_of_lambda(F, lambda + h) - psi_of_lambda(F, lambda - h)) / (2.0 * h);
}

std::vector<double> assemble_h_eigen(const PrincipalCurvatureSpectrum& spec, const FlowFunctional& F) {
  const int n = spec.n();
  if (F.n() != n) throw ValidationError("assemble_h_eigen: functional and spectrum dimensions differ");
  const auto tau = power_sums(spec, n);
  std::vector<double> f(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) f[j] = F.coefficient(j, tau);
  std::vector<double> h(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double kp = 1.0;
    for (int j = 0; j < n; ++j) {
      h[i] += f[j] * kp;
      kp *= spec[i];
    }
  }
  return h;
}

PrincipalCurvatureSpectrum conformal_shift(const PrincipalCurvatureSpectrum& spec, double c) {
  std::vector<double> k(spec.k().begin(), spec.k().end());
  for (double& v : k) v -= c;
  return PrincipalCurvatureSpectrum(std::move(k));
}

std::vector<double> extrinsic_ricci_eigen(const PrincipalCurvatureSpectrum& spec) {
  double tau1 = 0.0;
  for (double k : spec.k()) tau1 += k;
  std::vector<double> ric;
  ric.reserve(spec.k().size());
  for (double k : spec.k()) ric.push_back(tau1 * k - k * k);
  return ric;
}

double extrinsic_scalar(const PrincipalCurvatureSpectrum& spec) {
  const auto inv = symmetric_invariants(spec, 2);
  const double r = inv.tau[0] * inv.tau[0] - inv.tau[1];
  const double two_sigma2 = spec.n() >= 2 ? 2.0 * inv.sigma[1] : 0.0;
  double scale = 0.0;
  for (double k : spec.k()) scale += std::abs(k);
  if (std::abs(r - two_sigma2) > kRelTol * scale * scale + kAbsTol) {
    throw ValidationError("extrinsic_scalar: tau_1^2 - tau_2 and 2 sigma_2 disagree");
  }
  return r;
}

RicciFlatVerdict classify_extrinsic_ricci_flat(const PrincipalCurvatureSpectrum& spec, double tol) {
  if (!(tol > 0.0)) throw ValidationError("classify_extrinsic_ricci_flat: tol must be > 0");
  RicciFlatVerdict v;
  for (double e : extrinsic_ricci_eigen(spec)) v.max_ricci = std::max(v.max_ricci, std::abs(e));
  for (double k : spec.k()) v.max_curvature = std::max(v.max_curvature, std::abs(k));
  v.flat = v.max_ricci <= tol;
  v.totally_geodesic = v.max_curvature <= tol;
  return v;
}

}  // namespace egf
