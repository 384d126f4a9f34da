#include <gtest/gtest.h>

#include <cmath>

#include "cdecay/decay_analysis.hpp"
#include "cdecay/examples_catalog.hpp"

using namespace cdecay;

namespace {

Spectrum dirichlet(int n) { return generate_spectrum({ExampleKind::dirichlet_laplacian_1d, n, 1.0, 0.0}); }

}  // namespace

TEST(InitialState, Presets) {
  const Spectrum sp = dirichlet(4);
  const ModalState s = make_initial_state({InitPreset::spread_1_over_n}, sp);
  EXPECT_DOUBLE_EQ(s.coeffs(3, U), 0.25);
  EXPECT_DOUBLE_EQ(s.coeffs(3, Z), 0.25);
  EXPECT_EQ(s.coeffs.col(V).norm() + s.coeffs.col(W).norm(), 0.0);

  const ModalState m = make_initial_state({InitPreset::single_mode, 2}, sp);
  EXPECT_EQ(m.coeffs.norm(), std::sqrt(2.0));
  EXPECT_EQ(m.coeffs(1, U), 1.0);
  EXPECT_THROW(make_initial_state({InitPreset::single_mode, 5}, sp), std::invalid_argument);

  const ModalState v = make_initial_state({InitPreset::v_only_spread}, sp);
  EXPECT_EQ(v.coeffs.col(U).norm(), 0.0);
  EXPECT_DOUBLE_EQ(v.coeffs(1, Z), 0.5);

  const ModalState r1 = make_initial_state({InitPreset::random, 1, 42}, sp);
  const ModalState r2 = make_initial_state({InitPreset::random, 1, 42}, sp);
  const ModalState r3 = make_initial_state({InitPreset::random, 1, 43}, sp);
  EXPECT_EQ(r1.coeffs, r2.coeffs);
  EXPECT_NE(r1.coeffs, r3.coeffs);
}

TEST(InitialState, PresetNames) {
  for (InitPreset p : {InitPreset::spread_1_over_n, InitPreset::single_mode, InitPreset::v_only_spread,
                       InitPreset::random})
    EXPECT_EQ(parse_init_preset(to_string(p)), p);
  EXPECT_FALSE(parse_init_preset("spread"));
}

TEST(MeasureDecay, SingleModeIsExponential) {
  const Spectrum sp = dirichlet(4);
  const SystemParams p{0.5, 1.0, 1.0, 0.0};
  const ModalState x = make_initial_state({InitPreset::single_mode, 1}, sp);
  const DecayReport r50 = measure_polynomial_decay(run_trajectory(x, p, sp, 50.0, 2000), 1.0, 1e9);
  const DecayReport r200 = measure_polynomial_decay(run_trajectory(x, p, sp, 200.0, 8000), 1.0, 1e9);
  EXPECT_TRUE(std::isfinite(r200.sup_tK));
  EXPECT_LT(r200.loglog_slope, r50.loglog_slope);
  EXPECT_LT(r200.loglog_slope, -5.0);
  EXPECT_TRUE(r200.pass);
}

TEST(MeasureDecay, SpreadDataStaysBelowCeiling) {
  const Spectrum sp = dirichlet(64);
  for (double beta : {0.0, 0.5, 1.0, 1.5}) {
    const SystemParams p{0.5 * coupling_bound(sp, beta), beta, 1.0, 0.0};
    const ModalState x = make_initial_state({InitPreset::spread_1_over_n}, sp);
    const Trajectory t = run_trajectory(x, p, sp, 200.0, 4000);
    const DecayReport r = measure_polynomial_decay(t, 1.0, empirical_ceiling(x, p, sp));
    EXPECT_TRUE(r.pass) << "beta=" << beta << " sup=" << r.sup_tK << " ceiling=" << r.ceiling;
    // Oracle: direct per-mode summation of exact solutions at t_at_sup.
    double k = 0.0;
    const double kap = case_weight_power(beta, default_case(beta));
    for (std::size_t n = 0; n < sp.n_modes(); ++n) {
      const Vec4 y = expm4(mode_matrix(sp[n], p).entries, r.t_at_sup) * x.mode(n);
      const double lam = sp[n];
      k += std::pow(lam, kap) * (y(W) * y(W) + y(Z) * y(Z)) + std::pow(lam, kap + 1) * y(U) * y(U) +
           std::pow(lam, kap + 2) * y(V) * y(V);
    }
    EXPECT_NEAR(r.sup_tK, r.t_at_sup * k, 1e-9 * r.sup_tK);
  }
}

TEST(MeasureDecay, ConservationControlFails) {
  const Spectrum sp = dirichlet(64);
  const SystemParams p{0.0, 1.0, 1.0, 0.0};
  const ModalState x = make_initial_state({InitPreset::v_only_spread}, sp);
  const Trajectory t = run_trajectory(x, p, sp, 200.0, 4000);
  const auto k = sample_along(t, theorem_K_form(1.0, BetaCase::lower));
  for (double v : k) EXPECT_NEAR(v, k.front(), 1e-9 * k.front());
  const DecayReport r = measure_polynomial_decay(t, 1.0, empirical_ceiling(x, p, sp));
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.sup_tK, 200.0 * k.front(), 1e-8 * r.sup_tK);
}

TEST(MeasureDecay, Errors) {
  const Spectrum sp = dirichlet(3);
  const Trajectory t = run_trajectory(make_initial_state({}, sp), {0.5, 1.0, 1.0, 0.0}, sp, 5.0, 10);
  EXPECT_THROW(measure_polynomial_decay(t, 6.0, 1.0), std::invalid_argument);
  EXPECT_THROW(measure_polynomial_decay(t, 0.0, 1.0), std::invalid_argument);
}

TEST(MeasureDecay, FinerGridSupDominatesSubgrid) {
  const Spectrum sp = dirichlet(32);
  const SystemParams p{0.5, 0.5, 1.0, 0.0};
  const ModalState x = make_initial_state({}, sp);
  const DecayReport coarse = measure_polynomial_decay(run_trajectory(x, p, sp, 100.0, 500), 1.0, 1e9);
  const DecayReport fine = measure_polynomial_decay(run_trajectory(x, p, sp, 100.0, 2000), 1.0, 1e9);
  EXPECT_GE(fine.sup_tK, coarse.sup_tK * (1 - 1e-12));
}

TEST(MeasureDecay, TruncationMonotone) {
  // Same per-mode data; fewer modes remove nonnegative contributions to K.
  const SystemParams p{0.5, 1.0, 1.0, 0.0};
  double prev = 0.0;
  for (int n : {4, 8, 16, 32, 64}) {
    const Spectrum sp = dirichlet(n);
    const DecayReport r =
        measure_polynomial_decay(run_trajectory(make_initial_state({}, sp), p, sp, 200.0, 4000), 1.0, 1e9);
    EXPECT_GE(r.sup_tK, prev * (1 - 1e-12)) << n;
    prev = r.sup_tK;
  }
}

TEST(Sweep, GridOrderControlsAndEmpty) {
  const Spectrum sp = dirichlet(64);
  std::vector<SweepCell> cells;
  for (double beta : {0.0, 0.5, 1.0, 1.5}) cells.push_back({{0.5 * coupling_bound(sp, beta), beta, 1.0, 0.0}, false, std::nullopt});
  cells.push_back({{0.0, 1.0, 1.0, 0.0}, true, InitRecipe{InitPreset::v_only_spread}});
  cells.push_back({{2.0, 1.0, 1.0, 0.0}, false, std::nullopt});  // inadmissible and unmarked

  SweepOptions opt;
  const auto rows = sweep(cells, sp, InitRecipe{}, opt);
  ASSERT_EQ(rows.size(), cells.size());
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(rows[i].cell, cells[i]);
    EXPECT_TRUE(rows[i].report.pass);
    EXPECT_TRUE(rows[i].error.empty());
    ASSERT_TRUE(rows[i].theoretical_ceiling);
    EXPECT_LE(rows[i].report.sup_tK, *rows[i].theoretical_ceiling);
  }
  EXPECT_FALSE(rows[4].report.pass);
  EXPECT_FALSE(rows[4].theoretical_ceiling);
  EXPECT_FALSE(rows[5].report.pass);
  EXPECT_FALSE(rows[5].error.empty());

  opt.threads = 3;
  const auto threaded = sweep(cells, sp, InitRecipe{}, opt);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double a = threaded[i].report.sup_tK, b = rows[i].report.sup_tK;
    EXPECT_TRUE(a == b || (std::isnan(a) && std::isnan(b))) << i;
    EXPECT_EQ(threaded[i].error, rows[i].error);
  }
  EXPECT_TRUE(sweep({}, sp, InitRecipe{}, opt).empty());
}

TEST(Sweep, StableUnderRefinement) {
  for (double beta : {0.0, 1.0, 1.5}) {
    const SystemParams p{0.5, beta, 1.0, 0.0};
    auto sup = [&](int n, double t_end, int steps) {
      const Spectrum sp = dirichlet(n);
      return measure_polynomial_decay(run_trajectory(make_initial_state({}, sp), p, sp, t_end, steps), 1.0, 1e9)
          .sup_tK;
    };
    const double base = sup(64, 200.0, 4000);
    EXPECT_NEAR(sup(64, 400.0, 8000), base, 0.1 * base);
    EXPECT_NEAR(sup(128, 200.0, 4000), base, 0.1 * base);
    EXPECT_NEAR(sup(64, 200.0, 8000), base, 0.1 * base);
  }
}
