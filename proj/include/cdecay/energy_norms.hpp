/*
 * energy_norms.hpp: energies and weak norms of the coupled system.
 *
 * In modal coefficients the W' pairing is ⟨x, y⟩_{W'} = Σ λₙ^{-2} xₙ yₙ, so
 * ‖A^s x‖²_{W'} = Σ λₙ^{2s-2} xₙ². Every named quantity below is a
 * WeightedForm built from those weights.
 *
 *   E   = Σ ½(w² + z² + λu² + (λ² + ζλ)v²) + αλ^β uv
 *   K   = Σ λ^{β-4}(w² + z²) + λ^{β-3}u² + λ^{β-2}v²      (lower case, β ∈ [0, 1])
 *       = Σ λ^{-β-2}(w² + z²) + λ^{-β-1}u² + λ^{-β}v²      (upper case, β ∈ [1, 3/2])
 *   Ẽ   = Σ λ^{κ} Eₙ,  κ = β-4 (lower) or -β-2 (upper)
 *
 * Ẽ is E reweighted mode by mode, hence Ẽ' = -b Σ λ^{κ} w².
 */
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdecay/propagator.hpp"
#include "cdecay/quadratic_form.hpp"
#include "cdecay/spectral_core.hpp"

namespace cdecay {

/// Which of the two weak-norm families is in use. They coincide at β = 1.
enum class BetaCase {
  lower,  // β ∈ [0, 1]
  upper,  // β ∈ [1, 3/2]
};

inline const char* to_string(BetaCase c) { return c == BetaCase::lower ? "lower" : "upper"; }

inline BetaCase default_case(double beta) {
  if (!beta_in_range(beta)) throw std::domain_error("beta must lie in [0, 3/2]");
  return beta <= 1.0 ? BetaCase::lower : BetaCase::upper;
}

inline void check_case(double beta, BetaCase c) {
  if (!beta_in_range(beta)) throw std::domain_error("beta must lie in [0, 3/2]");
  if (c == BetaCase::lower && beta > 1.0) throw std::domain_error("lower case requires beta <= 1");
  if (c == BetaCase::upper && beta < 1.0) throw std::domain_error("upper case requires beta >= 1");
}

inline BetaCase resolve_case(double beta, std::optional<BetaCase> c) {
  if (!c) return default_case(beta);
  check_case(beta, *c);
  return *c;
}

/// Power κ with Ẽₙ = λ^κ Eₙ and K's velocity weight λ^κ.
inline double case_weight_power(double beta, BetaCase c) { return c == BetaCase::lower ? beta - 4.0 : -beta - 2.0; }

inline WeightedForm energy_form(const SystemParams& p) {
  std::vector<FormTerm> terms{
      {U, U, 0.5, 1.0}, {V, V, 0.5, 2.0}, {W, W, 0.5, 0.0}, {Z, Z, 0.5, 0.0}, {U, V, p.alpha, p.beta},
  };
  if (p.zeta_pert != 0.0) terms.push_back({V, V, 0.5 * p.zeta_pert, 1.0});
  return {"E", std::move(terms)};
}

inline WeightedForm theorem_K_form(double beta, BetaCase c) {
  check_case(beta, c);
  const double k = case_weight_power(beta, c);
  // u and v weights sit one and two powers above the velocity weight in both cases.
  return {"K", {{W, W, 1.0, k}, {Z, Z, 1.0, k}, {U, U, 1.0, k + 1.0}, {V, V, 1.0, k + 2.0}}};
}

inline WeightedForm tilde_E_form(const SystemParams& p, BetaCase c) {
  check_case(p.beta, c);
  return energy_form(p).shifted(case_weight_power(p.beta, c), "tildeE");
}

inline WeightedForm u_prime_sq_form() { return {"u_prime_sq", {{W, W, 1.0, 0.0}}}; }

/// Closed form of Ẽ' along the flow.
inline WeightedForm tilde_E_derivative_form(const SystemParams& p, BetaCase c) {
  check_case(p.beta, c);
  return {"tildeE'", {{W, W, -p.damping_b, case_weight_power(p.beta, c)}}};
}

/// ‖A^s x_k‖²_{W'} for one component k.
inline WeightedForm w_prime_norm_sq_form(Component k, double s) {
  return {"W' norm", {{k, k, 1.0, 2.0 * s - 2.0}}};
}

// ---------------------------------------------------------------------------

inline double energy_E(const ModalState& x, const SystemParams& p, const Spectrum& sp) {
  return energy_form(p).evaluate(x, sp);
}

inline double K_theorem(const ModalState& x, const SystemParams& p, const Spectrum& sp,
                        std::optional<BetaCase> c = std::nullopt) {
  return theorem_K_form(p.beta, resolve_case(p.beta, c)).evaluate(x, sp);
}

inline double tilde_E(const ModalState& x, const SystemParams& p, const Spectrum& sp,
                      std::optional<BetaCase> c = std::nullopt) {
  return tilde_E_form(p, resolve_case(p.beta, c)).evaluate(x, sp);
}

inline double tilde_E_derivative(const ModalState& x, const SystemParams& p, const Spectrum& sp,
                                 std::optional<BetaCase> c = std::nullopt) {
  return tilde_E_derivative_form(p, resolve_case(p.beta, c)).evaluate(x, sp);
}

inline double u_prime_norm_sq(const ModalState& x) { return x.coeffs.col(W).squaredNorm(); }

/// Two-sided constants (lo, hi) with lo·K ≤ Ẽ ≤ hi·K for admissible α.
struct SandwichConstants {
  double lo;
  double hi;
};

inline SandwichConstants sandwich_constants(const SystemParams& p, const Spectrum& sp) {
  const double bound = coupling_bound(sp, p.beta);
  const double a = std::abs(p.alpha);
  return {(bound - a) / (2.0 * bound), (bound + a) / (2.0 * bound)};
}

struct EnergySnapshot {
  double time;
  double E;
  double K;
  double tildeE;
  double u_prime_norm_sq;
};

inline EnergySnapshot snapshot(const ModalState& x, const SystemParams& p, const Spectrum& sp,
                               std::optional<BetaCase> c = std::nullopt) {
  const BetaCase bc = resolve_case(p.beta, c);
  return {x.time, energy_E(x, p, sp), K_theorem(x, p, sp, bc), tilde_E(x, p, sp, bc), u_prime_norm_sq(x)};
}

/// Composite Simpson on a uniform grid; an odd number of intervals closes
/// with a 3/8 panel.
inline double simpson(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  if (n < 2) return 0.0;
  const std::size_t intervals = n - 1;
  if (intervals == 1) return 0.5 * h * (f[0] + f[1]);
  std::size_t even = intervals % 2 == 0 ? intervals : intervals - 3;
  double acc = 0.0;
  if (even > 0) {
    double s = f[0] + f[even];
    for (std::size_t k = 1; k < even; ++k) s += (k % 2 == 1 ? 4.0 : 2.0) * f[k];
    acc += s * h / 3.0;
  }
  if (even != intervals) {
    const std::size_t k = even;
    acc += 3.0 * h / 8.0 * (f[k] + 3.0 * f[k + 1] + 3.0 * f[k + 2] + f[k + 3]);
  }
  return acc;
}

/// Evaluates a bound form at every trajectory sample.
inline std::vector<double> sample_along(const Trajectory& traj, const WeightedForm& form) {
  const BoundForm bound = form.bind(traj.spectrum);
  std::vector<double> out;
  out.reserve(traj.size());
  for (const ModalState& s : traj.states) out.push_back(bound(s));
  return out;
}

}  // namespace cdecay
