#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cdecay/decay_analysis.hpp"
#include "cdecay/lyapunov_certificate.hpp"

using namespace cdecay;

namespace {

Spectrum dirichlet(int n) {
  std::vector<double> lam;
  for (int k = 1; k <= n; ++k) lam.push_back(double(k) * k);
  return Spectrum(lam);
}

ModalState ones_single() {
  ModalState s = zero_state(Spectrum({1.0}));
  s.coeffs << 1, 1, 1, 1;
  return s;
}

}  // namespace

TEST(SelectP, Examples) {
  EXPECT_DOUBLE_EQ(select_p(1.0, 0.5, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(select_p(4.0, 0.5, 1.5), 5.0);
  EXPECT_GT(select_p(1.0, 0.999999, 1.0), 1e6);
  EXPECT_THROW(select_p(1.0, 0.0, 1.0), CertificateError);
  EXPECT_THROW(select_p(1.0, 1.0, 1.0), CertificateError);
  for (double beta : {0.0, 0.7, 1.5})
    for (double a : {0.1, -0.5, 0.95}) {
      const double bnd = std::pow(3.0, (3 - 2 * beta) / 2);
      const double p = select_p(3.0, a * bnd, beta);
      EXPECT_GT(p, 1.0);
      EXPECT_LT(std::pow((p + 1) / (p - 1), 2), std::pow(3.0, 3 - 2 * beta) / (a * bnd * a * bnd));
    }
}

TEST(SelectGamma, WorkedExample) {
  const GammaChoice g = select_gamma_young(5.0, 1.0, 0.5, 1.0, BetaCase::lower);
  EXPECT_DOUBLE_EQ(g.lower, 0.75);
  EXPECT_DOUBLE_EQ(g.upper, 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(g.gamma, 1.0);
  EXPECT_DOUBLE_EQ(g.delta, 0.5);
  EXPECT_DOUBLE_EQ(g.zeta, 0.5);
}

TEST(SelectGamma, UpperCaseAtUnitLambdaMatchesLowerArithmetic) {
  const GammaChoice lo = select_gamma_young(5.0, 1.0, 0.5, 1.0, BetaCase::lower);
  const GammaChoice up = select_gamma_young(5.0, 1.0, 0.5, 1.5, BetaCase::upper);
  EXPECT_DOUBLE_EQ(up.delta, lo.delta);
  EXPECT_DOUBLE_EQ(up.gamma, lo.gamma);
}

TEST(SelectGamma, StrictInteriorAndPositivity) {
  for (double l1 : {0.3, 1.0, 5.0})
    for (double beta : {0.0, 0.5, 1.0, 1.25, 1.5})
      for (double frac : {0.05, 0.5, 0.99}) {
        const double alpha = frac * std::pow(l1, (3 - 2 * beta) / 2);
        const double p = select_p(l1, alpha, beta);
        const GammaChoice g = select_gamma_young(p, l1, alpha, beta, default_case(beta));
        EXPECT_LT(g.lower, g.gamma);
        EXPECT_LT(g.gamma, g.upper);
        EXPECT_GT(g.delta, 0.0);
        EXPECT_GT(g.zeta, 0.0);
      }
}

TEST(SelectGamma, DegeneratesAtBound) {
  const double p = select_p(1.0, 1.0 - 1e-9, 1.0);
  const GammaChoice g = select_gamma_young(p, 1.0, 1.0 - 1e-9, 1.0, BetaCase::lower);
  EXPECT_LT(g.upper / g.lower - 1.0, 1e-3);
  EXPECT_LT(g.delta / ((p - 1) / 2), 1e-3);
}

TEST(HEps, WorkedExample) {
  const SystemParams p{0.5, 1.0, 1.0, 0.0};
  const Spectrum sp({1.0});
  const LyapunovParams l = make_lyapunov_params(p, 1.0, BetaCase::lower, 0.01);
  EXPECT_DOUBLE_EQ(l.p, 5.0);
  EXPECT_DOUBLE_EQ(l.rho, 6.0);
  EXPECT_DOUBLE_EQ(l.a_exp, 0.0);
  EXPECT_NEAR(H_eps(ones_single(), p, l, sp), 2.54, 1e-14);
}

TEST(HEps, EpsZeroIsEnergyAndZeroState) {
  const Spectrum sp = dirichlet(6);
  std::mt19937_64 rng(1);
  for (double beta : {0.0, 1.0, 1.5}) {
    const SystemParams p{0.3 * coupling_bound(sp, beta), beta, 1.0, 0.0};
    LyapunovParams l = make_lyapunov_params(p, sp.lambda1(), default_case(beta), 0.0);
    const ModalState x = random_state(sp, rng);
    EXPECT_DOUBLE_EQ(H_eps(x, p, l, sp), energy_E(x, p, sp));
    EXPECT_DOUBLE_EQ(H_eps_derivative(x, p, l, sp), -p.damping_b * x.coeffs.col(W).squaredNorm());
    l.eps = 0.01;
    EXPECT_EQ(H_eps(zero_state(sp), p, l, sp), 0.0);
    EXPECT_EQ(H_eps_derivative(zero_state(sp), p, l, sp), 0.0);
  }
}

TEST(HEps, SignedRhoFollowsAlpha) {
  const LyapunovParams a = make_lyapunov_params({0.5, 1.0, 1.0, 0.0}, 1.0, BetaCase::lower);
  const LyapunovParams b = make_lyapunov_params({-0.5, 1.0, 1.0, 0.0}, 1.0, BetaCase::lower);
  EXPECT_DOUBLE_EQ(a.rho, -b.rho);
  EXPECT_DOUBLE_EQ(a.a_exp, 0.0);
  EXPECT_DOUBLE_EQ(make_lyapunov_params({0.5, 0.25, 1.0, 0.0}, 1.0, BetaCase::lower).a_exp, 0.0);
  EXPECT_DOUBLE_EQ(make_lyapunov_params({0.5, 1.5, 1.0, 0.0}, 1.0, BetaCase::upper).a_exp, -0.5);
}

TEST(HEpsDerivative, MatchesCentralDifferences) {
  const Spectrum sp = dirichlet(8);
  std::mt19937_64 rng(5);
  for (double beta : {0.0, 0.5, 1.0, 1.25, 1.5}) {
    const SystemParams p{0.5 * coupling_bound(sp, beta), beta, 1.0, 0.0};
    const LyapunovParams l = make_lyapunov_params(p, sp.lambda1(), default_case(beta));
    const ModalState x = random_state(sp, rng);
    const double h = 1e-5;
    const StepOperator fwd(p, sp, h);
    ModalState back = x;
    // x(-h) from the inverse step.
    for (std::size_t n = 0; n < sp.n_modes(); ++n)
      back.coeffs.row(static_cast<Eigen::Index>(n)) =
          (expm4(-mode_matrix(sp[n], p).entries, h) * x.mode(n)).transpose();
    const double fd = (H_eps(fwd.apply(x), p, l, sp) - H_eps(back, p, l, sp)) / (2 * h);
    const double exact = H_eps_derivative(x, p, l, sp);
    EXPECT_NEAR(fd, exact, 1e-7 * std::abs(exact)) << "beta=" << beta;
  }
}

TEST(Certify, PassesForAdmissibleCells) {
  const Spectrum sp = dirichlet(16);
  const auto grid = default_probe_grid(1.0);
  for (double beta : {0.0, 0.5, 1.0, 1.25, 1.5}) {
    const SystemParams p{0.5 * coupling_bound(sp, beta), beta, 1.0, 0.0};
    const CertificateReport r = certify(p, sp, grid);
    EXPECT_TRUE(r.pass) << "beta=" << beta << " " << r.reason;
    EXPECT_GT(r.uniform_gamma, 0.0);
    EXPECT_GT(r.min_positivity, 0.0);
    EXPECT_FALSE(r.failing_lambda);
    ASSERT_TRUE(r.lyap);
    EXPECT_DOUBLE_EQ(r.p_used, 5.0);
    EXPECT_GE(r.per_mode_margins.size(), grid.size());
  }
}

TEST(Certify, NegativeControlsAndPrecondition) {
  const Spectrum sp = dirichlet(16);
  const auto grid = default_probe_grid(1.0);
  const CertificateReport r = certify({1.01, 1.0, 1.0, 0.0}, sp, grid);
  EXPECT_FALSE(r.pass);
  ASSERT_TRUE(r.failing_lambda);
  EXPECT_EQ(*r.failing_lambda, 1.0);
  EXPECT_LT(mode_energy_determinant(1.0, {1.01, 1.0, 1.0, 0.0}), 0.0);
  EXPECT_THROW(certify({0.0, 1.0, 1.0, 0.0}, sp, grid), CertificateError);
  EXPECT_THROW(certify({0.5, 2.0, 1.0, 0.0}, sp, grid), std::domain_error);
}

TEST(Certify, HalvesFromLargeEps) {
  const Spectrum sp = dirichlet(4);
  const auto grid = default_probe_grid(1.0, 1e2, 5);
  const CertificateReport big = certify({0.5, 1.0, 1.0, 0.0}, sp, grid, 10.0);
  EXPECT_TRUE(big.pass);
  EXPECT_GT(big.halvings, 0);
  EXPECT_DOUBLE_EQ(big.eps_used, 10.0 / std::pow(2.0, big.halvings));
}

TEST(Certify, FailsAtEpsFloorWhenNoEpsWorks) {
  // A strong A₂ perturbation with this H_ε has no certificate at any ε.
  const Spectrum sp = dirichlet(4);
  const CertificateReport r = certify({0.5, 1.0, 1.0, 4.0}, sp, default_probe_grid(1.0, 1e3, 5));
  EXPECT_FALSE(r.pass);
  EXPECT_LT(r.eps_used, 2 * kEpsFloor);
  EXPECT_TRUE(r.failing_lambda);
  EXPECT_FALSE(r.reason.empty());
}

TEST(Certify, EpsMonotonicity) {
  const Spectrum sp = dirichlet(8);
  const auto grid = default_probe_grid(1.0, 1e4, 10);
  for (double beta : {0.0, 1.0, 1.5}) {
    const SystemParams p{0.5 * coupling_bound(sp, beta), beta, 1.0, 0.0};
    const CertificateReport r = certify(p, sp, grid);
    ASSERT_TRUE(r.pass);
    double eps = r.eps_used;
    for (int k = 0; k < 6; ++k) {
      eps /= 2;
      EXPECT_TRUE(certify(p, sp, grid, eps).pass) << "beta=" << beta << " eps=" << eps;
    }
  }
}

TEST(Certify, ScaleInvariance) {
  // Margins are ratios of homogeneous forms; scaling a state scales H_ε and K alike.
  const Spectrum sp = dirichlet(5);
  const SystemParams p{0.5, 0.5, 1.0, 0.0};
  const CertificateReport r = certify(p, sp, default_probe_grid(1.0, 1e3, 10));
  ASSERT_TRUE(r.pass);
  std::mt19937_64 rng(2);
  const ModalState x = random_state(sp, rng);
  ModalState y = x;
  y.coeffs *= 7.0;
  EXPECT_NEAR(H_eps(y, p, *r.lyap, sp), 49.0 * H_eps(x, p, *r.lyap, sp), 1e-12 * H_eps(y, p, *r.lyap, sp));
  EXPECT_NEAR(K_theorem(y, p, sp), 49.0 * K_theorem(x, p, sp), 1e-12 * K_theorem(y, p, sp));
}

TEST(Certify, IntegratedBound) {
  const Spectrum sp = dirichlet(8);
  std::mt19937_64 rng(31);
  for (double beta : {0.0, 1.0, 1.5}) {
    const SystemParams p{0.5 * coupling_bound(sp, beta), beta, 1.0, 0.0};
    const CertificateReport r = certify(p, sp, default_probe_grid(1.0));
    ASSERT_TRUE(r.pass);
    const ModalState x = random_state(sp, rng);
    const Trajectory t = run_trajectory(x, p, sp, 50.0, 5000);
    const auto k = sample_along(t, theorem_K_form(beta, r.beta_case));
    EXPECT_LE(simpson(k, t.dt()), H_eps(x, p, *r.lyap, sp) / r.uniform_gamma * (1 + 1e-6));
  }
}

TEST(Certify, ReportsWorstLambdaAndProbePoints) {
  const Spectrum sp({1.0, 2.5, 1e7});
  const auto pts = probe_points(sp, default_probe_grid(1.0, 1e3, 2));
  EXPECT_EQ(pts.front(), 1.0);
  EXPECT_EQ(pts.back(), 1e7);
  EXPECT_TRUE(std::is_sorted(pts.begin(), pts.end()));
  EXPECT_EQ(std::adjacent_find(pts.begin(), pts.end()), pts.end());
}

TEST(ProbeGrid, Shape) {
  const auto g = default_probe_grid(2.0, 1e6, 20);
  EXPECT_EQ(g.size(), 121u);
  EXPECT_DOUBLE_EQ(g.front(), 2.0);
  EXPECT_DOUBLE_EQ(g.back(), 2e6);
  EXPECT_THROW(default_probe_grid(0.0), std::invalid_argument);
}

TEST(PerturbedA2, AdmissibleRangeShrinksWithZeta) {
  const Spectrum sp = dirichlet(16);
  const auto grid = default_probe_grid(1.0, 1e6, 10);
  std::vector<double> fractions;
  for (int k = 1; k <= 19; ++k) fractions.push_back(0.05 * k);
  std::vector<int> counts;
  std::vector<std::vector<bool>> sets;
  for (double zeta : {0.0, 1.0, 2.0, 3.0, 4.0}) {
    const auto ok = certified_alpha_fractions({0.0, 1.0, 1.0, zeta}, sp, fractions, grid);
    sets.push_back(ok);
    counts.push_back(static_cast<int>(std::count(ok.begin(), ok.end(), true)));
  }
  for (std::size_t k = 1; k < sets.size(); ++k) {
    EXPECT_LE(counts[k], counts[k - 1]);
    for (std::size_t i = 0; i < fractions.size(); ++i)
      if (sets[k][i]) {
        EXPECT_TRUE(sets[k - 1][i]) << "zeta index " << k << " fraction " << fractions[i];
      }
  }
  EXPECT_EQ(counts.front(), 19);
  EXPECT_LT(counts.back(), counts.front());
}
