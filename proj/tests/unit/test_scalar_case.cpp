#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cdecay/scalar_case.hpp"

using namespace cdecay;

namespace {
const ScalarParams kRef{2.0, 3.0, 1.0};
}

TEST(ScalarParams, Validation) {
  EXPECT_TRUE(kRef.is_valid());
  EXPECT_FALSE((ScalarParams{1.0, 1.0, 1.0}.is_valid()));
  EXPECT_FALSE((ScalarParams{1.0, 1.0, 0.0}.is_valid()));
  EXPECT_THROW((ScalarParams{1.0, 1.0, 1.1}.validate()), std::domain_error);
  EXPECT_THROW((ScalarParams{-1.0, 1.0, 0.1}.validate()), std::domain_error);
}

TEST(ScalarEnergy, Examples) {
  const ScalarEnergy a = scalar_energy(Vec4(1, 0, 0, 0), {2.0, 1.0, 0.5});
  EXPECT_DOUBLE_EQ(a.E, 1.0);
  EXPECT_DOUBLE_EQ(a.K, 1.0);
  const ScalarEnergy b = scalar_energy(Vec4(1, 1, 0, 0), kRef);
  EXPECT_DOUBLE_EQ(b.K, 2.5);
  EXPECT_DOUBLE_EQ(b.E, 3.5);
  const ScalarEnergy z = scalar_energy(Vec4::Zero(), kRef);
  EXPECT_EQ(z.E, 0.0);
  EXPECT_EQ(z.K, 0.0);
}

TEST(ScalarEnergy, DifferenceIsCouplingTerm) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    const Vec4 x(d(rng), d(rng), d(rng), d(rng));
    const ScalarEnergy e = scalar_energy(x, kRef);
    EXPECT_NEAR(e.E - e.K, kRef.c * x(0) * x(1), 1e-14);
  }
}

TEST(ScalarConstants, Examples) {
  const ScalarConstants k = scalar_C1_C2_eps1({1.0, 1.0, 0.5}, 0.0);
  EXPECT_DOUBLE_EQ(k.C1, 0.5);
  EXPECT_DOUBLE_EQ(k.C2, 1.5);
  EXPECT_NEAR(scalar_C1_C2_eps1({1.0, 1.0, 0.5}, k.eps1).C1, 0.0, 1e-15);
  const ScalarConstants r = scalar_C1_C2_eps1(kRef, 0.0);
  EXPECT_NEAR(scalar_C1_C2_eps1(kRef, r.eps1).C1, 0.0, 1e-15);
  const double closed = ((std::sqrt(6.0) - 1.0) / std::sqrt(6.0)) / (2.0 / std::sqrt(2.0) + 1.5 * std::sqrt(3.0));
  EXPECT_NEAR(r.eps1, closed, 1e-15);
  // Independent bisection on C₁(ε) = 0.
  double lo = 0.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (scalar_C1_C2_eps1(kRef, mid).C1 > 0.0 ? lo : hi) = mid;
  }
  EXPECT_NEAR(r.eps1, lo, 1e-14);
}

TEST(ScalarHEps, Examples) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const Vec4 x(d(rng), d(rng), d(rng), d(rng));
    EXPECT_DOUBLE_EQ(scalar_H_eps(x, kRef, 0.0), scalar_energy(x, kRef).E);
  }
  EXPECT_EQ(scalar_H_eps(Vec4::Zero(), kRef, 0.1), 0.0);
  EXPECT_THROW(scalar_H_eps(Vec4::Ones(), {1.0, 1.0, 0.0}, 0.1), std::domain_error);
  // Direct transcription of H_ε = ℰ − εvv' + 2εuu' + (3ε/2c)(μu'v − λuv').
  const Vec4 x(0.3, -0.7, 1.1, 0.4);
  const double eps = 0.05;
  const double want = scalar_energy(x, kRef).E - eps * x(1) * x(3) + 2 * eps * x(0) * x(2) +
                      3 * eps / (2 * kRef.c) * (kRef.mu * x(2) * x(1) - kRef.lambda * x(0) * x(3));
  EXPECT_NEAR(scalar_H_eps(x, kRef, eps), want, 1e-15);
}

TEST(ScalarHEps, SandwichAtHalfEps1) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (const ScalarParams& s : {kRef, ScalarParams{1.0, 1.0, 0.5}, ScalarParams{5.0, 0.3, -1.1}}) {
    const double eps = 0.5 * scalar_C1_C2_eps1(s, 0.0).eps1;
    const ScalarConstants k = scalar_C1_C2_eps1(s, eps);
    for (int i = 0; i < 2000; ++i) {
      const Vec4 x(d(rng), d(rng), d(rng), d(rng));
      const double kk = scalar_energy(x, s).K, h = scalar_H_eps(x, s, eps);
      EXPECT_GE(h, k.C1 * kk - 1e-12);
      EXPECT_LE(h, k.C2 * kk + 1e-12);
    }
  }
}

TEST(ScalarHEps, DerivativeMatchesFiniteDifference) {
  const double eps = scalar_select_eps(kRef);
  const Mat4 m = scalar_companion(kRef);
  const Vec4 x(0.4, -1.0, 0.2, 0.9);
  const double h = 1e-5;
  const double fd = (scalar_H_eps(expm4(m, h) * x, kRef, eps) - scalar_H_eps(expm4(-m, h) * x, kRef, eps)) / (2 * h);
  EXPECT_NEAR(fd, scalar_H_eps_derivative(x, kRef, eps), 1e-7 * std::abs(fd));
  // ℰ' = -u'².
  const double fde = (scalar_energy(expm4(m, h) * x, kRef).E - scalar_energy(expm4(-m, h) * x, kRef).E) / (2 * h);
  EXPECT_NEAR(fde, -x(2) * x(2), 1e-9);
}

TEST(ScalarCertificate, PositiveDefiniteAndDecaying) {
  for (const ScalarParams& s : {kRef, ScalarParams{1.0, 1.0, 0.5}, ScalarParams{5.0, 0.3, -1.1}}) {
    const double eps = scalar_select_eps(s);
    EXPECT_GT(eps, 0.0);
    EXPECT_LT(eps, scalar_C1_C2_eps1(s, 0.0).eps1);
    const ScalarCertificate c = scalar_certificate(s, eps);
    EXPECT_GT(c.positivity, 0.0);
    EXPECT_GT(c.C3, 0.0);
    // H(t) ≤ H(0) exp(-C₃ t / C₂) along a trajectory.
    const Vec4 init(1.0, 0.5, -0.3, 0.2);
    const double h0 = scalar_H_eps(init, s, eps);
    for (const ScalarSample& smp : scalar_trajectory(s, init, 30.0, 300))
      EXPECT_LE(scalar_H_eps(smp.x, s, eps), h0 * std::exp(-c.C3 / c.C2 * smp.t) * (1 + 1e-12) + 1e-300);
  }
}

TEST(ScalarYoung, DocumentedValues) {
  const ScalarYoung y = scalar_young_constants(kRef);
  EXPECT_DOUBLE_EQ(y.c1, 8.0 * 3.0 / 5.0);
  EXPECT_DOUBLE_EQ(y.c2, 9.0 * 2.0 * 9.0 / (2.0 * 5.0));
  EXPECT_DOUBLE_EQ(y.c3, 9.0 / 8.0);
}

TEST(ScalarDecay, ReferenceRateWithinFivePercent) {
  const DecayRates r = scalar_decay_check(kRef, Vec4(1.0, 0.3, -0.2, 0.5), 80.0);
  EXPECT_LT(r.oracle_rate, 0.0);
  EXPECT_LT(std::abs(r.measured_rate - r.oracle_rate), 0.05 * std::abs(r.oracle_rate));
}

TEST(ScalarDecay, SlowestEigenspaceWithinOnePercent) {
  Eigen::EigenSolver<Mat4> es(scalar_companion(kRef));
  Eigen::Index k = 0;
  es.eigenvalues().real().maxCoeff(&k);
  const Vec4 init = es.eigenvectors().col(k).real();
  const DecayRates r = scalar_decay_check(kRef, init, 80.0);
  EXPECT_LT(std::abs(r.measured_rate - r.oracle_rate), 0.01 * std::abs(r.oracle_rate));
}

TEST(ScalarDecay, NegativeControlAboveCouplingLimit) {
  const ScalarParams s{1.0, 1.0, 1.1};
  EXPECT_GE(spectral_abscissa(scalar_companion(s)), 0.0);
  const DecayRates r = scalar_decay_check(s, Vec4(1, 0, 0, 0), 40.0);
  EXPECT_GE(r.measured_rate, 0.0);
  EXPECT_THROW(scalar_decay_check(kRef, Vec4::Zero(), 10.0), std::domain_error);
}

TEST(ScalarCompanion, Layout) {
  Mat4 want;
  want << 0, 0, 1, 0, 0, 0, 0, 1, -2, -1, -1, 0, -1, -3, 0, 0;
  EXPECT_EQ(scalar_companion(kRef), want);
}

TEST(RegressionSlope, ExactLine) {
  const std::vector<double> t{0, 1, 2, 3}, y{1, 3, 5, 7};
  EXPECT_DOUBLE_EQ(regression_slope(t, y), 2.0);
  EXPECT_THROW(regression_slope(std::vector<double>{1.0}, std::vector<double>{1.0}), std::invalid_argument);
}
