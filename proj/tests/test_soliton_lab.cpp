#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "egf/errors.hpp"
#include "egf/functionals.hpp"
#include "egf/soliton_lab.hpp"
#include "oracles.hpp"

using namespace egf;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

CurveGrid periodic_grid(int nodes) { return {0.0, 2 * kPi, nodes, Boundary::periodic}; }

BiregularGrid biregular(int nx, double L0, const std::function<double(double, double)>& g00,
                        const std::function<double(double, double)>& g11, bool periodic0 = false) {
  BiregularGrid g;
  g.nx0 = g.nx1 = nx;
  g.periodic0 = periodic0;
  g.length0 = L0;
  g.length1 = 2 * kPi;
  g.g00.resize(static_cast<std::size_t>(nx) * nx);
  g.g11.resize(g.g00.size());
  for (int a = 0; a < nx; ++a) {
    for (int b = 0; b < nx; ++b) {
      const double x0 = a * g.spacing0(), x1 = b * g.spacing1();
      g.g00[g.index(a, b)] = g00(x0, x1);
      g.g11[g.index(a, b)] = g11(x0, x1);
    }
  }
  return g;
}

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("mu of lambda") {
  SUBCASE("psi = lambda, n = 2 gives -1 everywhere") {
    const auto F = make_functional("b1", 2);
    for (double l : {-3.0, -1e-9, 0.0, 1e-9, 0.5, 7.0}) CHECK(mu_of_lambda(F, l) == Approx(-1.0).epsilon(1e-9));
  }
  SUBCASE("constant psi gives zero") {
    const auto F = make_functional("affine", 3, {{"a", 0.0}, {"b", 2.5}});
    for (double l : {-1.0, 0.0, 2.0}) CHECK(mu_of_lambda(F, l) == 0.0);
  }
  SUBCASE("psi = -2 lambda + c, n = 1 gives 1") {
    for (double c : {0.0, 0.7, -3.0}) {
      const auto F = make_functional("affine", 1, {{"a", -2.0}, {"b", c}});
      for (double l : {-5.0, -0.3, -1e-8, -1e-9, 0.0, 1e-9, 1e-8, 2e-8, 0.3, 5.0}) CHECK(mu_of_lambda(F, l) == 1.0);
    }
  }
  SUBCASE("hand-built functionals fall back to the difference quotient") {
    const FlowFunctional F(1, {{"f0 = -2 tau1 + 0.7", [](std::span<const double> t) { return -2.0 * t[0] + 0.7; }}});
    CHECK_FALSE(F.affine_slope().has_value());
    for (double l : {-0.3, 0.0, 2e-8, 5.0}) CHECK(mu_of_lambda(F, l) == Approx(1.0).epsilon(1e-7));
  }
  SUBCASE("continuity across the branch switch") {
    CHECK(mu_continuity_defect(make_functional("b1", 2)) <= 1e-4);
    CHECK(mu_continuity_defect(make_functional("umbilical_square", 2)) <= 1e-4);
    CHECK(mu_continuity_defect(make_functional("affine", 1, {{"a", -2.0}, {"b", 0.4}})) <= 1e-4);
  }
}

TEST_CASE("normal soliton check") {
  const auto F = make_functional("b1", 2);
  SUBCASE("constant lambda is a soliton, with the X = 0 alternative noted") {
    const auto rep = check_normal_soliton(make_profile(periodic_grid(64), [](double) { return 0.6; }), F);
    CHECK(rep.verdict == Verdict::soliton);
    CHECK(rep.eps_used == Approx(psi_of_lambda(F, 0.0)));
    CHECK(rep.max_residual() <= 1e-12);
    const bool mentions = std::any_of(rep.notes.begin(), rep.notes.end(),
                                      [](const std::string& s) { return s.find("X = 0") != std::string::npos; });
    CHECK(mentions);
  }
  SUBCASE("lambda = 0") {
    CHECK(check_normal_soliton(make_profile(periodic_grid(64), [](double) { return 0.0; }), F).verdict ==
          Verdict::soliton);
  }
  SUBCASE("nonconstant lambda is not a soliton") {
    const auto rep = check_normal_soliton(make_profile(periodic_grid(64), [](double s) { return std::sin(s); }), F);
    CHECK(rep.verdict == Verdict::not_soliton);
    CHECK(rep.n_lambda_norm > 0.5);
  }
  SUBCASE("psi' = 0 with nonconstant lambda is degenerate") {
    const auto G = make_functional("affine", 2, {{"a", 0.0}, {"b", 1.0}});
    const auto rep = check_normal_soliton(make_profile(periodic_grid(64), [](double s) { return std::sin(s); }), G);
    CHECK(rep.verdict == Verdict::degenerate);
  }
  SUBCASE("corpus: soliton iff N(lambda) small, psi' bounded away from zero") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const FlowFunctional functionals[] = {make_functional("b1", 2),
                                          make_functional("tau1_minus_c", 3, {{"c", 0.5}}),
                                          make_functional("affine", 1, {{"a", -2.0}, {"b", 0.3}})};
    int misclassified = 0;
    for (int k = 0; k < 50; ++k) {
      const auto& G = functionals[k % 3];
      const double c = u(rng), amp = k % 2 ? u(rng) : 0.0;
      const int mode = 1 + k % 4;
      const auto p = make_profile(periodic_grid(128), [&](double s) { return c + amp * std::sin(mode * s); });
      const auto rep = check_normal_soliton(p, G);
      if ((rep.verdict == Verdict::soliton) != (rep.n_lambda_norm <= rep.tol)) ++misclassified;
      if (amp == 0.0) CHECK(rep.verdict == Verdict::soliton);
    }
    CHECK(misclassified == 0);
  }
  SUBCASE("trace identity consistency for judged solitons") {
    for (double C : {-1.2, 0.0, 0.4}) {
      const auto G = make_functional("umbilical_square", 3);
      const auto rep = check_normal_soliton(make_profile(periodic_grid(32), [&](double) { return C; }), G);
      REQUIRE(rep.verdict == Verdict::soliton);
      const double mu = mu_of_lambda(G, C);
      // h(b) = eps g - 2 mu b_1 traces to n (eps - 2 mu lambda) = n psi(lambda)
      const double trace_h = 3.0 * (rep.eps_used - 2.0 * mu * C);
      const double trace_psi = 3.0 * psi_of_lambda(G, C);
      const bool one_of = std::abs(trace_h - trace_psi) <= 1e-8 ||
                          std::abs(3.0 * (rep.eps_used - (2.0 / 3.0) * mu * C) - trace_psi) <= 1e-8;
      CHECK(one_of);
    }
  }
}

TEST_CASE("trace identity") {
  const auto F = make_functional("umbilical_square", 3);
  const double l = 0.9;
  CHECK(check_trace_identity(PrincipalCurvatureSpectrum::umbilical(3, l), F, psi_of_lambda(F, l), 0.0) ==
        Approx(0.0).scale(1.0));
  const auto G = make_functional("tau1_minus_c", 2, {{"c", 0.4}});
  CHECK(check_trace_identity(PrincipalCurvatureSpectrum({0, 0}), G, -0.4, 0.0) == Approx(0.0).scale(1.0));
  SUBCASE("extrinsic Ricci choice on k = (1, 2): tr h = -8") {
    // -2 Ric^ex has trace -2 (tau1^2 - tau2) = -8; for n = 2 the catalog
    // encodes it as f0 = -(tau1^2 - tau2), giving the same trace.
    const auto R = make_functional("ext_ricci", 2);
    const PrincipalCurvatureSpectrum k({1, 2});
    CHECK(check_trace_identity(k, R, 0.0, 0.0) == Approx(-8.0));
    CHECK(check_trace_identity(k, R, 1.0, 0.5) == Approx(-8.0 - 2.0 - 1.0));
  }
}

TEST_CASE("leaf-average eps") {
  CHECK(estimate_eps_leaf({6, 6, 6}, {1, 2, 3}, 3) == Approx(2.0));
  const auto F = make_functional("b1", 2);
  CHECK(estimate_eps_leaf({2 * psi_of_lambda(F, 0.3)}, {1.0}, 2) == Approx(psi_of_lambda(F, 0.3)));
  std::vector<double> tr, w;
  for (int i = 0; i < 64; ++i) {
    tr.push_back(2.0 * (1.0 + std::sin(2 * kPi * i / 64)));
    w.push_back(1.0);
  }
  CHECK(estimate_eps_leaf(tr, w, 2) == Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(estimate_eps_leaf({1, 2}, {0, 0}, 1), ValidationError);
}

TEST_CASE("conformal Killing factor") {
  const auto F = make_functional("tau1_minus_c", 2, {{"c", 0.5}});
  const double f00 = -0.5;
  const auto flat = make_profile(periodic_grid(16), [](double) { return 0.0; });
  auto r = conformal_killing_factor(flat, F, f00);
  CHECK(r.killing);
  CHECK(r.homothety);
  r = conformal_killing_factor(flat, F, 1.0);
  CHECK_FALSE(r.killing);
  CHECK(r.homothety);
  CHECK(r.mu[0] == Approx(f00 - 1.0));
  r = conformal_killing_factor(make_profile(periodic_grid(16), [](double s) { return std::sin(s); }), F, 0.0);
  CHECK_FALSE(r.killing);
  CHECK_FALSE(r.homothety);
}

TEST_CASE("biregular surface check") {
  const auto F = make_functional("b1", 1);
  const int nx = 128;
  SUBCASE("flat torus") {
    const auto g = biregular(nx, 2 * kPi, [](double, double) { return 1.0; }, [](double, double) { return 1.0; }, true);
    const auto rep = check_biregular_surface(g, F, psi_of_lambda(F, 0.0));
    CHECK(rep.verdict == Verdict::soliton);
    for (const auto& r : rep.residuals) CHECK(r.linf <= rep.tol);
    for (double l : biregular_lambda(g)) CHECK(std::abs(l) <= 1e-12);
  }
  SUBCASE("g11 = exp(-2 x0) gives lambda = 1") {
    const auto g = biregular(nx, 2.0, [](double, double) { return 1.0; },
                             [](double x0, double) { return std::exp(-2.0 * x0); });
    for (double l : biregular_lambda(g)) CHECK(l == Approx(1.0).epsilon(1e-8));
    const auto rep = check_biregular_surface(g, F, psi_of_lambda(F, 1.0));
    CHECK(rep.verdict == Verdict::soliton);
    CHECK(rep.residuals.size() == 4);
    const double d = std::max(g.spacing0(), g.spacing1());
    for (const auto& r : rep.residuals) CHECK(r.linf <= 10 * d * d);
    SUBCASE("mismatched eps is rejected") {
      CHECK(check_biregular_surface(g, F, psi_of_lambda(F, 0.0)).verdict == Verdict::not_soliton);
    }
  }
  SUBCASE("g11 independent of x0: geodesic foliation") {
    const auto g = biregular(64, 2.0, [](double x0, double) { return 1.0 + x0 * x0; },
                             [](double, double x1) { return 2.0 + std::sin(x1); });
    for (double l : biregular_lambda(g)) CHECK(std::abs(l) <= 1e-12);
  }
  SUBCASE("nonpositive metric is rejected") {
    auto g = biregular(16, 1.0, [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
    g.g11[5] = -1.0;
    CHECK_THROWS_AS(check_biregular_surface(g, F, 0.0), ValidationError);
  }
  SUBCASE("grids below 8 x 8 are rejected") {
    auto g = biregular(6, 1.0, [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
    CHECK_THROWS_AS(g.validate(), ValidationError);
  }
}

TEST_CASE("extrinsic Ricci soliton classifier") {
  SUBCASE("n = 4, tau1 = 0, r = 1") {
    const auto c = classify_ricci_soliton(4, 0.0, 1.0);
    REQUIRE(c.roots.size() == 2);
    CHECK(sorted(c.roots) == std::vector<double>{-1.0, 1.0});
    REQUIRE(c.spectra.size() == 1);
    CHECK(c.spectra[0].n1 == 2);
    CHECK(c.spectra[0].n2 == 2);
    CHECK(c.cpc);
  }
  SUBCASE("negative discriminant") {
    const auto c = classify_ricci_soliton(4, 0.0, -1.0);
    CHECK(c.roots.empty());
    CHECK(c.spectra.empty());
    CHECK(c.discriminant == Approx(-4.0));
  }
  SUBCASE("n = 3, tau1 = 1, r = 2 has no admissible spectrum") {
    const auto c = classify_ricci_soliton(3, 1.0, 2.0);
    REQUIRE(c.n2_minus_n1.has_value());
    CHECK(*c.n2_minus_n1 == Approx(1.0 / 3.0));
    CHECK(c.spectra.empty());
  }
  SUBCASE("n < 3 is rejected") { CHECK_THROWS_AS(classify_ricci_soliton(2, 0.0, 1.0), ValidationError); }
  SUBCASE("brute-force equivalence and spectrum reconstruction") {
    for (int n = 3; n <= 6; ++n) {
      for (int i = 0; i <= 20; ++i) {
        for (int j = 0; j <= 20; ++j) {
          const double tau1 = -2.0 + i / 5.0, r = -2.0 + j / 5.0;
          const auto c = classify_ricci_soliton(n, tau1, r);
          auto expected = oracle::enumerate_ricci_soliton_spectra(n, tau1, r);
          std::vector<oracle::Spectrum> got;
          for (const auto& s : c.spectra) {
            got.push_back(sorted(s.expand()));
            CHECK(s.n1 * s.k1 + s.n2 * s.k2 == Approx(tau1).epsilon(1e-10).scale(1.0));
            CHECK(s.k1 * (s.k1 - tau1) == Approx(r).epsilon(1e-10).scale(1.0));
            if (s.n2 > 0) CHECK(s.k2 * (s.k2 - tau1) == Approx(r).epsilon(1e-10).scale(1.0));
          }
          std::sort(got.begin(), got.end());
          std::sort(expected.begin(), expected.end());
          REQUIRE(got.size() == expected.size());
          for (std::size_t a = 0; a < got.size(); ++a) CHECK(oracle::sup_diff(got[a], expected[a]) <= 1e-9);
        }
      }
    }
  }
}
