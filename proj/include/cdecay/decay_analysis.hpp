/*
 * decay_analysis.hpp: measuring the 1/t bound on finite spectra.
 *
 * On a truncated spectrum every trajectory is eventually exponential, so the
 * polynomial character shows up as a bound on sup t·K(t) that does not grow
 * with the number of modes when the data is spread over many of them.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "cdecay/energy_norms.hpp"
#include "cdecay/lyapunov_certificate.hpp"
#include "cdecay/propagator.hpp"
#include "cdecay/scalar_case.hpp"
#include "cdecay/spectral_core.hpp"

namespace cdecay {

enum class InitPreset {
  spread_1_over_n,  // uₙ = 1/n, v'ₙ = 1/n
  single_mode,      // u_k = 1, v'_k = 1
  v_only_spread,    // v'ₙ = 1/n
  random,           // finite-energy random coefficients from a seed
};

struct InitRecipe {
  InitPreset preset = InitPreset::spread_1_over_n;
  int mode = 1;  // 1-based, single_mode only
  std::uint64_t seed = 0;

  bool operator==(const InitRecipe&) const = default;
};

inline const char* to_string(InitPreset p) {
  switch (p) {
    case InitPreset::spread_1_over_n: return "spread_1_over_n";
    case InitPreset::single_mode: return "single_mode";
    case InitPreset::v_only_spread: return "v_only_spread";
    case InitPreset::random: return "random";
  }
  return "?";
}

inline std::optional<InitPreset> parse_init_preset(std::string_view name) {
  for (InitPreset p : {InitPreset::spread_1_over_n, InitPreset::single_mode, InitPreset::v_only_spread,
                       InitPreset::random})
    if (name == to_string(p)) return p;
  return std::nullopt;
}

/// Portable uniform draw in [-1, 1) from a 64-bit engine.
inline double uniform_pm1(std::mt19937_64& rng) {
  return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
}

/// Random state with each of u, v, u', v' contributing O(1) per mode to E.
inline ModalState random_state(const Spectrum& spectrum, std::mt19937_64& rng) {
  ModalState s = zero_state(spectrum);
  for (std::size_t n = 0; n < spectrum.n_modes(); ++n) {
    const double lam = spectrum[n];
    const auto r = static_cast<Eigen::Index>(n);
    s.coeffs(r, U) = uniform_pm1(rng) / std::sqrt(lam);
    s.coeffs(r, V) = uniform_pm1(rng) / lam;
    s.coeffs(r, W) = uniform_pm1(rng);
    s.coeffs(r, Z) = uniform_pm1(rng);
  }
  return s;
}

inline ModalState make_initial_state(const InitRecipe& recipe, const Spectrum& spectrum) {
  ModalState s = zero_state(spectrum);
  const auto n_modes = static_cast<Eigen::Index>(spectrum.n_modes());
  switch (recipe.preset) {
    case InitPreset::spread_1_over_n:
      for (Eigen::Index n = 0; n < n_modes; ++n) {
        s.coeffs(n, U) = 1.0 / static_cast<double>(n + 1);
        s.coeffs(n, Z) = 1.0 / static_cast<double>(n + 1);
      }
      break;
    case InitPreset::single_mode:
      if (recipe.mode < 1 || recipe.mode > n_modes)
        throw std::invalid_argument("single_mode: mode index out of range");
      s.coeffs(recipe.mode - 1, U) = 1.0;
      s.coeffs(recipe.mode - 1, Z) = 1.0;
      break;
    case InitPreset::v_only_spread:
      for (Eigen::Index n = 0; n < n_modes; ++n) s.coeffs(n, Z) = 1.0 / static_cast<double>(n + 1);
      break;
    case InitPreset::random: {
      std::mt19937_64 rng(recipe.seed);
      s = random_state(spectrum, rng);
      break;
    }
  }
  return s;
}

/// ‖u'‖² + ‖v'‖² + ‖u‖_V² + ‖v‖_W²: the data norm on the right of the 1/t bound.
inline double initial_data_norm(const ModalState& x, const Spectrum& sp) {
  return WeightedForm("data", {{W, W, 1.0, 0.0}, {Z, Z, 1.0, 0.0}, {U, U, 1.0, 1.0}, {V, V, 1.0, 2.0}})
      .evaluate(x, sp);
}

struct DecayReport {
  double sup_tK = 0.0;
  double t_at_sup = 0.0;
  double loglog_slope = 0.0;
  double bound_constant = 0.0;
  double ceiling = 0.0;
  bool pass = false;
};

/// sup over t ∈ [t_min, t_end] of t·K(t), the tail log–log slope on
/// [t_end/2, t_end], and the verdict sup_tK ≤ ceiling.
inline DecayReport measure_polynomial_decay(const Trajectory& traj, double t_min, double ceiling,
                                            std::optional<BetaCase> beta_case = std::nullopt) {
  if (traj.size() < 2) throw std::invalid_argument("measure_polynomial_decay: trajectory too short");
  if (!(t_min > 0.0) || t_min > traj.times.back())
    throw std::invalid_argument("measure_polynomial_decay: t_min outside trajectory range");

  const BetaCase c = resolve_case(traj.params.beta, beta_case);
  const std::vector<double> k = sample_along(traj, theorem_K_form(traj.params.beta, c));
  const double t_end = traj.times.back();

  DecayReport r;
  r.ceiling = ceiling;
  std::vector<double> lt, lk;
  bool positive_tail = true;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    if (t < t_min) continue;
    if (t * k[i] > r.sup_tK) {
      r.sup_tK = t * k[i];
      r.t_at_sup = t;
    }
    if (t >= 0.5 * t_end) {
      if (!(k[i] > 0.0)) positive_tail = false;
      lt.push_back(std::log(t));
      lk.push_back(k[i] > 0.0 ? std::log(k[i]) : 0.0);
    }
  }
  r.loglog_slope = positive_tail && lt.size() >= 2 ? regression_slope(lt, lk) : std::numeric_limits<double>::quiet_NaN();
  const double data = initial_data_norm(traj.states.front(), traj.spectrum);
  r.bound_constant = data > 0.0 ? r.sup_tK / data : std::numeric_limits<double>::quiet_NaN();
  r.pass = r.sup_tK <= ceiling;
  return r;
}

/// 10·Ẽ(0)·(bound + |α|)/(bound - |α|), the sweep's default acceptance ceiling.
inline double empirical_ceiling(const ModalState& init, const SystemParams& params, const Spectrum& spectrum) {
  const double bound = coupling_bound(spectrum, params.beta);
  const double a = std::abs(params.alpha);
  return 10.0 * tilde_E(init, params, spectrum) * (bound + a) / (bound - a);
}

struct SweepCell {
  SystemParams params;
  bool negative_control = false;
  std::optional<InitRecipe> recipe;  // overrides the sweep-wide recipe

  bool operator==(const SweepCell&) const = default;
};

struct SweepRow {
  SweepCell cell;
  std::size_t n_modes = 0;
  double t_end = 0.0;
  DecayReport report;
  std::optional<double> theoretical_ceiling;
  std::string error;
};

struct SweepOptions {
  double t_end = 200.0;
  int n_steps = 4000;
  double t_min = 1.0;
  double grid_max_factor = 1e6;
  int points_per_decade = 20;
  unsigned threads = 1;
};

inline SweepRow run_sweep_cell(const SweepCell& cell, const Spectrum& spectrum, const InitRecipe& recipe,
                               const SweepOptions& opt) {
  SweepRow row;
  row.cell = cell;
  row.n_modes = spectrum.n_modes();
  row.t_end = opt.t_end;
  try {
    cell.params.validate();
    if (!cell.negative_control && !is_admissible(cell.params, spectrum))
      throw std::domain_error("cell is neither admissible nor marked as a negative control");
    const ModalState init = make_initial_state(cell.recipe.value_or(recipe), spectrum);
    const Trajectory traj = run_trajectory(init, cell.params, spectrum, opt.t_end, opt.n_steps);
    row.report = measure_polynomial_decay(traj, opt.t_min, empirical_ceiling(init, cell.params, spectrum));
    if (is_admissible(cell.params, spectrum)) {
      const auto grid = default_probe_grid(spectrum.lambda1(), opt.grid_max_factor, opt.points_per_decade);
      const CertificateReport cert = certify(cell.params, spectrum, grid);
      if (cert.pass)
        row.theoretical_ceiling = polynomial_bound_ceiling(cell.params, spectrum, cert.uniform_gamma,
                                                           H_eps(init, cell.params, *cert.lyap, spectrum));
    }
  } catch (const std::exception& e) {
    row.error = e.what();
    row.report = DecayReport{};
    row.report.sup_tK = row.report.loglog_slope = row.report.bound_constant = std::numeric_limits<double>::quiet_NaN();
    row.report.pass = false;
  }
  return row;
}

/// One row per cell in input order. Cells run on up to opt.threads workers;
/// each row depends only on its own cell, so the table is identical for any
/// thread count.
inline std::vector<SweepRow> sweep(std::span<const SweepCell> cells, const Spectrum& spectrum,
                                   const InitRecipe& recipe, const SweepOptions& opt) {
  std::vector<SweepRow> rows(cells.size());
  const unsigned workers = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(cells.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) rows[i] = run_sweep_cell(cells[i], spectrum, recipe, opt);
    return rows;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < cells.size(); i += workers) rows[i] = run_sweep_cell(cells[i], spectrum, recipe, opt);
    });
  for (auto& t : pool) t.join();
  return rows;
}

}  // namespace cdecay
