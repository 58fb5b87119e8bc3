#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the code path it is used to check.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace egf::oracle {

/// tau_j = sum_i k_i^j by repeated std::pow.
inline std::vector<double> power_sums(const std::vector<double>& k, int m) {
  std::vector<double> tau(static_cast<std::size_t>(m), 0.0);
  for (int j = 1; j <= m; ++j) {
    for (double x : k) tau[j - 1] += std::pow(x, j);
  }
  return tau;
}

/// sigma_j from expanding prod_i (x - k_i) = sum_j (-1)^j sigma_j x^{n-j}.
inline std::vector<double> elementary_by_expansion(const std::vector<double>& k) {
  std::vector<double> e{1.0};  // e[j] = sigma_j
  for (double x : k) {
    std::vector<double> next(e.size() + 1, 0.0);
    for (std::size_t j = 0; j < e.size(); ++j) {
      next[j] += e[j];
      next[j + 1] += e[j] * x;
    }
    e = std::move(next);
  }
  return {e.begin() + 1, e.end()};
}

/// sigma_j of |k_i|: the magnitude scale of the terms in sigma_j.
inline std::vector<double> elementary_scale(const std::vector<double>& k) {
  std::vector<double> a(k.size());
  std::transform(k.begin(), k.end(), a.begin(), [](double x) { return std::abs(x); });
  return elementary_by_expansion(a);
}

inline std::vector<double> random_spectrum(std::mt19937_64& rng, int n, double bound) {
  std::uniform_real_distribution<double> d(-bound, bound);
  std::vector<double> k(static_cast<std::size_t>(n));
  for (auto& x : k) x = d(rng);
  return k;
}

/// A candidate extrinsic Ricci soliton spectrum, sorted ascending.
using Spectrum = std::vector<double>;

/// Every spectrum made of the roots of k^2 - tau1 k - r (n1 copies of one
/// root, n - n1 of the other, n1 = 0..n) whose entries sum to tau1 within tol.
inline std::vector<Spectrum> enumerate_ricci_soliton_spectra(int n, double tau1, double r, double tol = 1e-8) {
  std::vector<Spectrum> out;
  const double disc = tau1 * tau1 + 4.0 * r;
  if (disc < 0.0) return out;
  const double sq = std::sqrt(disc);
  const double roots[2] = {0.5 * (tau1 + sq), 0.5 * (tau1 - sq)};
  for (int n1 = 0; n1 <= n; ++n1) {
    Spectrum k(static_cast<std::size_t>(n1), roots[0]);
    k.insert(k.end(), static_cast<std::size_t>(n - n1), roots[1]);
    double sum = 0.0;
    bool roots_ok = true;
    for (double x : k) {
      sum += x;
      if (std::abs(x * (x - tau1) - r) > tol * std::max(1.0, std::abs(r))) roots_ok = false;
    }
    if (!roots_ok || std::abs(sum - tau1) > tol * std::max(1.0, std::abs(tau1))) continue;
    std::sort(k.begin(), k.end());
    const bool seen = std::any_of(out.begin(), out.end(), [&](const Spectrum& s) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (std::abs(s[i] - k[i]) > 1e-9) return false;
      }
      return true;
    });
    if (!seen) out.push_back(k);
  }
  return out;
}

/// Real roots of a k^2 + b k + c by enumeration of the quadratic formula;
/// used to restate "k (k - tau1) = 0 for all i implies k = 0".
inline bool spectrum_is_ricci_flat(const std::vector<double>& k, double tol) {
  double tau1 = 0.0;
  for (double x : k) tau1 += x;
  return std::all_of(k.begin(), k.end(), [&](double x) { return std::abs(x * (tau1 - x)) <= tol; });
}

/// Exact translation for psi(lambda) = lambda: lambda_t(s) = lambda0(s - t/2).
template <class F>
std::vector<double> translated(const F& lambda0, const std::vector<double>& s, double t) {
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = lambda0(s[i] - 0.5 * t);
  return out;
}

inline double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Observed order log2(e_coarse / e_fine) for successive halvings.
inline std::vector<double> observed_orders(const std::vector<double>& errors) {
  std::vector<double> p;
  for (std::size_t i = 1; i < errors.size(); ++i) p.push_back(std::log2(errors[i - 1] / errors[i]));
  return p;
}

}  // namespace egf::oracle
