#pragma once

// Cohomological equation X(f) = h - mean(h) for a linear flow X = v . grad on
// the torus R^d / Z^d (d = 2 or 3), solved mode by mode on a truncated
// Fourier table:
//
//   f_u = h_u / (2 pi i <u, v>),   0 < |u|_inf <= K,   f_0 = 0.
//
// For the umbilical soliton reading psi(lambda) - eps = (2/n) X(f) with
// n = d - 1 the soliton potential is (n/2) f and eps is the mean of h.

#include <complex>
#include <vector>

namespace egf {

using Mode = std::vector<int>;

struct FourierCoefficient {
  Mode u;
  std::complex<double> value;
};

struct TorusCohomologyProblem {
  int dim = 2;
  std::vector<double> v;
  std::vector<FourierCoefficient> h;  // conjugate-symmetric: h_{-u} = conj(h_u)
  int K = 1;
  double s = 1.0;                   // Diophantine exponent
  double resonance_floor = 1e-12;   // minimum of |<u,v>| |u|^s on the support of h

  void validate() const;
  int leaf_dimension() const { return dim - 1; }
};

/// Adds a real mode a cos(2 pi <u,x>) + b sin(2 pi <u,x>) as the pair (u, -u).
void add_real_mode(TorusCohomologyProblem& p, const Mode& u, double cos_amp, double sin_amp = 0.0);

/// Adds a constant (zero mode).
void add_constant(TorusCohomologyProblem& p, double c);

/// Coefficients within |u|_inf <= K of samples h(a/M, b/M) on an M x M grid
/// (values row-major in a), by direct summation. Requires M >= 2K + 1.
std::vector<FourierCoefficient> fourier_from_grid(const std::vector<double>& values, int M, int K);

struct DiophantineMargin {
  double value = 0.0;  // min |<u,v>| |u|_2^s over 0 < |u|_inf <= K
  Mode worst;
};

DiophantineMargin diophantine_margin(const std::vector<double>& v, int K, double s);

struct SolvedMode {
  Mode u;
  std::complex<double> h;
  std::complex<double> f;
  double divisor = 0.0;  // |<u,v>|
};

struct CohomologySolution {
  std::vector<SolvedMode> modes;  // nonzero modes of h, with f_u
  double mean = 0.0;              // h_0, absorbed into eps
  double eps = 0.0;               // soliton eps = mean of h
  double soliton_scale = 1.0;     // n/2: the soliton potential is soliton_scale * f
  double margin = 0.0;            // Diophantine margin at radius K
  Mode margin_mode;
  double s = 1.0;
  double residual = 0.0;          // sup |v.grad f - (h - h_0)| on the verification grid
  double imaginary_part = 0.0;    // sup |Im f| on the verification grid
  int verification_nodes = 0;     // per axis
};

/// Throws ResonanceError when a mode carrying energy has |<u,v>| |u|^s below the floor.
CohomologySolution solve_linear_flow(const TorusCohomologyProblem& p);

struct AmplificationRow {
  int shell = 0;                   // ceil(|u|_2)
  std::size_t modes = 0;
  double max_amplification = 0.0;  // max |f_u| / |h_u|
  double min_divisor = 0.0;        // min |<u,v>|
  double bound = 0.0;              // shell^s / (2 pi margin)
};

std::vector<AmplificationRow> amplification_report(const CohomologySolution& sol);

/// Evaluates f (real part) at a torus point.
double evaluate_solution(const CohomologySolution& sol, const std::vector<double>& x);

}  // namespace egf
