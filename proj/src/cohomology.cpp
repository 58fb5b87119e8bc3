#include "egf/cohomology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "egf/errors.hpp"

namespace egf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double dot(const Mode& u, const std::vector<double>& v) {
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) d += u[i] * v[i];
  return d;
}

double norm2(const Mode& u) {
  double s = 0.0;
  for (int c : u) s += static_cast<double>(c) * c;
  return std::sqrt(s);
}

int norm_inf(const Mode& u) {
  int m = 0;
  for (int c : u) m = std::max(m, std::abs(c));
  return m;
}

bool is_zero(const Mode& u) {
  return std::all_of(u.begin(), u.end(), [](int c) { return c == 0; });
}

Mode negate(Mode u) {
  for (int& c : u) c = -c;
  return u;
}

std::string format_mode(const Mode& u) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < u.size(); ++i) os << (i ? ", " : "") << u[i];
  os << ")";
  return os.str();
}

// Visits every u with 0 < |u|_inf <= K.
template <class Fn>
void for_each_mode(int dim, int K, Fn&& fn) {
  Mode u(static_cast<std::size_t>(dim), -K);
  while (true) {
    if (!is_zero(u)) fn(u);
    int axis = 0;
    while (axis < dim && ++u[axis] > K) {
      u[axis] = -K;
      ++axis;
    }
    if (axis == dim) break;
  }
}

// exp(2 pi i k j / M) for k in [-K, K], j in [0, M).
std::vector<std::complex<double>> phase_table(int K, int M) {
  std::vector<std::complex<double>> t(static_cast<std::size_t>(2 * K + 1) * M);
  for (int k = -K; k <= K; ++k) {
    for (int j = 0; j < M; ++j) {
      const double arg = kTwoPi * static_cast<double>(k) * j / M;
      t[static_cast<std::size_t>(k + K) * M + j] = {std::cos(arg), std::sin(arg)};
    }
  }
  return t;
}

}  // namespace

void TorusCohomologyProblem::validate() const {
  if (dim != 2 && dim != 3) throw ValidationError("cohomology: torus dimension must be 2 or 3");
  if (static_cast<int>(v.size()) != dim) throw ValidationError("cohomology: direction v must have dim entries");
  for (double c : v) {
    if (!std::isfinite(c)) throw ValidationError("cohomology: direction v must be finite");
  }
  if (K < 1) throw ValidationError("cohomology: truncation radius K must be >= 1");
  if (!(s > 0.0)) throw ValidationError("cohomology: Diophantine exponent s must be positive");
  if (!(resonance_floor > 0.0)) throw ValidationError("cohomology: resonance floor must be positive");

  std::map<Mode, std::complex<double>> table;
  double scale = 0.0;
  for (const auto& c : h) {
    if (static_cast<int>(c.u.size()) != dim) throw ValidationError("cohomology: mode " + format_mode(c.u) + " has wrong dimension");
    if (norm_inf(c.u) > K) throw ValidationError("cohomology: mode " + format_mode(c.u) + " exceeds the truncation radius");
    if (!std::isfinite(c.value.real()) || !std::isfinite(c.value.imag())) throw ValidationError("cohomology: non-finite coefficient");
    if (!table.emplace(c.u, c.value).second) throw ValidationError("cohomology: duplicate mode " + format_mode(c.u));
    scale = std::max(scale, std::abs(c.value));
  }
  const double tol = 1e-12 * std::max(1.0, scale);
  for (const auto& [u, val] : table) {
    auto it = table.find(negate(u));
    const std::complex<double> partner = it == table.end() ? std::complex<double>{} : it->second;
    if (std::abs(partner - std::conj(val)) > tol) {
      throw ValidationError("cohomology: h is not real, coefficient of " + format_mode(negate(u)) +
                            " is not the conjugate of " + format_mode(u));
    }
  }
}

void add_real_mode(TorusCohomologyProblem& p, const Mode& u, double cos_amp, double sin_amp) {
  if (is_zero(u)) {
    add_constant(p, cos_amp);
    return;
  }
  // a cos t + b sin t = c e^{it} + conj(c) e^{-it} with c = (a - i b)/2
  const std::complex<double> c{0.5 * cos_amp, -0.5 * sin_amp};
  p.h.push_back({u, c});
  p.h.push_back({negate(u), std::conj(c)});
}

void add_constant(TorusCohomologyProblem& p, double c) {
  p.h.push_back({Mode(static_cast<std::size_t>(p.dim), 0), {c, 0.0}});
}

std::vector<FourierCoefficient> fourier_from_grid(const std::vector<double>& values, int M, int K) {
  if (M < 2 * K + 1) throw ValidationError("cohomology: grid of M nodes per axis cannot resolve K (need M >= 2K+1)");
  if (values.size() != static_cast<std::size_t>(M) * M) throw ValidationError("cohomology: grid sample count is not M x M");
  const auto table = phase_table(K, M);
  auto phase = [&](int k, int j) { return std::conj(table[static_cast<std::size_t>(k + K) * M + j]); };
  const int width = 2 * K + 1;
  // rows[a][u2]: transform along the second axis.
  std::vector<std::complex<double>> rows(static_cast<std::size_t>(M) * width);
  for (int a = 0; a < M; ++a) {
    for (int u2 = -K; u2 <= K; ++u2) {
      std::complex<double> acc{};
      for (int b = 0; b < M; ++b) acc += values[static_cast<std::size_t>(a) * M + b] * phase(u2, b);
      rows[static_cast<std::size_t>(a) * width + (u2 + K)] = acc;
    }
  }
  std::vector<FourierCoefficient> out;
  double scale = 0.0;
  for (int u1 = -K; u1 <= K; ++u1) {
    for (int u2 = -K; u2 <= K; ++u2) {
      std::complex<double> acc{};
      for (int a = 0; a < M; ++a) acc += rows[static_cast<std::size_t>(a) * width + (u2 + K)] * phase(u1, a);
      acc /= static_cast<double>(M) * M;
      scale = std::max(scale, std::abs(acc));
      out.push_back({{u1, u2}, acc});
    }
  }
  // Drop round-off modes; keep exact conjugate pairs.
  const double cut = 1e-13 * std::max(1.0, scale);
  std::erase_if(out, [&](const FourierCoefficient& c) { return std::abs(c.value) <= cut; });
  std::map<Mode, std::complex<double>> table_by_mode;
  for (const auto& c : out) table_by_mode[c.u] = c.value;
  for (auto& c : out) {
    if (is_zero(c.u)) {
      c.value = {c.value.real(), 0.0};
      continue;
    }
    auto it = table_by_mode.find(negate(c.u));
    if (it == table_by_mode.end()) {
      c.value = {};
      continue;
    }
    // Symmetrize against round-off: average with the conjugate partner.
    c.value = 0.5 * (c.value + std::conj(it->second));
  }
  std::erase_if(out, [](const FourierCoefficient& c) { return c.value == std::complex<double>{}; });
  return out;
}

DiophantineMargin diophantine_margin(const std::vector<double>& v, int K, double s) {
  if (K < 1) throw ValidationError("diophantine_margin: K must be >= 1");
  if (v.size() < 2 || v.size() > 3) throw ValidationError("diophantine_margin: dimension must be 2 or 3");
  DiophantineMargin m;
  m.value = std::numeric_limits<double>::infinity();
  for_each_mode(static_cast<int>(v.size()), K, [&](const Mode& u) {
    const double q = std::abs(dot(u, v)) * std::pow(norm2(u), s);
    if (q < m.value) {
      m.value = q;
      m.worst = u;
    }
  });
  return m;
}

CohomologySolution solve_linear_flow(const TorusCohomologyProblem& p) {
  p.validate();
  CohomologySolution sol;
  sol.s = p.s;
  sol.soliton_scale = 0.5 * p.leaf_dimension();
  const auto margin = diophantine_margin(p.v, p.K, p.s);
  sol.margin = margin.value;
  sol.margin_mode = margin.worst;

  double scale = 0.0;
  for (const auto& c : p.h) scale = std::max(scale, std::abs(c.value));
  const double active = 1e-14 * std::max(1.0, scale);

  double worst_q = std::numeric_limits<double>::infinity();
  Mode worst;
  for (const auto& c : p.h) {
    if (is_zero(c.u)) {
      sol.mean += c.value.real();
      continue;
    }
    if (std::abs(c.value) <= active) continue;
    const double d = dot(c.u, p.v);
    const double q = std::abs(d) * std::pow(norm2(c.u), p.s);
    if (q < worst_q) {
      worst_q = q;
      worst = c.u;
    }
    sol.modes.push_back({c.u, c.value, c.value / std::complex<double>(0.0, kTwoPi * d), std::abs(d)});
  }
  if (worst_q < p.resonance_floor) {
    std::ostringstream os;
    os << "cohomology: resonant mode u = " << format_mode(worst) << " carries energy; |<u,v>| |u|^s = " << worst_q
       << " is below the floor " << p.resonance_floor << " (unsolvable within truncation)";
    throw ResonanceError(os.str(), worst);
  }
  sol.eps = sol.mean;

  // Verification on a uniform grid via separable phase tables.
  const int nodes = p.dim == 2 ? 4 * p.K : std::min(4 * p.K, 32);
  sol.verification_nodes = nodes;
  const auto table = phase_table(p.K, nodes);
  auto phase = [&](int k, int j) { return table[static_cast<std::size_t>(k + p.K) * nodes + j]; };
  const int planes = p.dim == 3 ? nodes : 1;
  for (int a = 0; a < nodes; ++a) {
    for (int b = 0; b < nodes; ++b) {
      for (int c = 0; c < planes; ++c) {
        std::complex<double> lhs{}, rhs{}, f{};
        for (const auto& m : sol.modes) {
          std::complex<double> e = phase(m.u[0], a) * phase(m.u[1], b);
          if (p.dim == 3) e *= phase(m.u[2], c);
          f += m.f * e;
          lhs += m.f * std::complex<double>(0.0, kTwoPi * dot(m.u, p.v)) * e;
          rhs += m.h * e;
        }
        sol.residual = std::max(sol.residual, std::abs(lhs - rhs));
        sol.imaginary_part = std::max(sol.imaginary_part, std::abs(f.imag()));
      }
    }
  }
  return sol;
}

std::vector<AmplificationRow> amplification_report(const CohomologySolution& sol) {
  std::map<int, AmplificationRow> shells;
  for (const auto& m : sol.modes) {
    const int shell = static_cast<int>(std::ceil(norm2(m.u) - 1e-12));
    auto& row = shells[shell];
    row.shell = shell;
    ++row.modes;
    row.max_amplification = std::max(row.max_amplification, std::abs(m.f) / std::abs(m.h));
    row.min_divisor = row.modes == 1 ? m.divisor : std::min(row.min_divisor, m.divisor);
  }
  std::vector<AmplificationRow> out;
  for (auto& [shell, row] : shells) {
    row.bound = sol.margin > 0.0 ? std::pow(static_cast<double>(shell), sol.s) / (kTwoPi * sol.margin)
                                 : std::numeric_limits<double>::infinity();
    out.push_back(row);
  }
  return out;
}

double evaluate_solution(const CohomologySolution& sol, const std::vector<double>& x) {
  std::complex<double> f{};
  for (const auto& m : sol.modes) {
    double arg = 0.0;
    for (std::size_t i = 0; i < m.u.size(); ++i) arg += kTwoPi * m.u[i] * x[i];
    f += m.f * std::complex<double>(std::cos(arg), std::sin(arg));
  }
  return f.real();
}

}  // namespace egf
