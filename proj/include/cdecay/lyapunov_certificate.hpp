/*
 * lyapunov_certificate.hpp: the perturbed energy H_ε and its numerical certificate.
 *
 *   H_ε = E + ε Σ [ -λ₁^{2-β} λ^{β-4} v z + p λ₁^{-a} λ^{a-2} u w + ρ(λ^{-2} w v - λ^{-3} u z) ]
 *
 * with a = min(0, 1-β) and ρ = (p+1) λ₁^{2-β} / (2α). The free parameters are
 * chosen algorithmically:
 *
 *   p  from q = (p+1)/(p-1) = (r+1)/2,  r = λ₁^{(3-2β)/2}/|α| > 1
 *   γ  geometric mean of the open interval on which δ > 0 and ζ > 0
 *   ε  halved from min(δ, ζ) / (10(1 + p + |ρ|)) until the certificate holds
 *
 * A certificate is a pair of per-mode generalized-eigenvalue bounds, uniform
 * over the spectrum and a geometric probe grid in λ:
 *
 *   H_ε ≥ c·K     (positivity)
 *   -H_ε' ≥ γ*·K  (domination)
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdecay/energy_norms.hpp"
#include "cdecay/quadratic_form.hpp"
#include "cdecay/spectral_core.hpp"

namespace cdecay {

class CertificateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline double select_p(double lambda1, double alpha, double beta) {
  if (!beta_in_range(beta)) throw std::domain_error("select_p: beta must lie in [0, 3/2]");
  if (alpha == 0.0) throw CertificateError("select_p: alpha must be nonzero");
  const double r = std::pow(lambda1, (3.0 - 2.0 * beta) / 2.0) / std::abs(alpha);
  if (!(r > 1.0)) throw CertificateError("select_p: |alpha| must be below the coupling bound");
  return (r + 3.0) / (r - 1.0);
}

struct GammaChoice {
  double gamma;
  double delta;
  double zeta;
  double lower;  // open interval (lower, upper) on which δ, ζ > 0
  double upper;
};

inline GammaChoice select_gamma_young(double p, double lambda1, double alpha, double beta, BetaCase c) {
  check_case(beta, c);
  const double a = std::abs(alpha);
  const double l2b = std::pow(lambda1, 2.0 - beta);
  const double s = c == BetaCase::lower ? std::pow(lambda1, (beta - 1.0) / 2.0) : std::pow(lambda1, beta - 1.0);

  GammaChoice g{};
  g.lower = s * (p + 1.0) * a / ((p - 1.0) * l2b);
  g.upper = c == BetaCase::lower ? (p - 1.0) / (s * (p + 1.0) * a) : (p - 1.0) / ((p + 1.0) * a);
  g.gamma = std::sqrt(g.lower * g.upper);
  const double delta_head = c == BetaCase::lower ? (p - 1.0) / 2.0 : (p - 1.0) / 2.0 * s;
  g.delta = delta_head - s * (p + 1.0) * a / 2.0 * g.gamma;
  g.zeta = (p - 1.0) / 2.0 * l2b - s * (p + 1.0) * a / (2.0 * g.gamma);
  if (!(g.lower < g.upper) || !(g.delta > 0.0) || !(g.zeta > 0.0))
    throw std::logic_error("select_gamma_young: empty Young interval for the selected p");
  return g;
}

/// Smallest constants in the four Young splittings of the cross terms against
/// ‖u'‖², obtained from the Cauchy–Schwarz factorizations that route each
/// pairing through the norms it is absorbed into. Documentation only.
struct YoungConstants {
  double c1;
  double c2;
  double c3;
  double c4;
};

struct LyapunovParams {
  double p;
  double gamma_young;
  double delta;
  double zeta_const;
  double rho;
  double a_exp;
  double eps;
  double lambda1;
  BetaCase beta_case;
  double gamma_lower;
  double gamma_upper;
  YoungConstants young;
};

inline YoungConstants young_constants(const LyapunovParams& l, double beta) {
  const double l1 = l.lambda1;
  const double rho2 = l.rho * l.rho;
  YoungConstants y{};
  y.c1 = l.beta_case == BetaCase::lower ? l.p * l.p / (2.0 * l.delta * std::pow(l1, 3.0))
                                        : l.p * l.p * std::pow(l1, beta - 4.0) / (2.0 * l.delta);
  y.c2 = 3.0 * rho2 / (4.0 * l1 * l1);
  y.c3 = 3.0 * rho2 / (4.0 * std::pow(l1, 4.0));
  y.c4 = rho2 * std::pow(l1, -2.0 - beta) / (2.0 * l.zeta_const);
  return y;
}

inline LyapunovParams make_lyapunov_params(const SystemParams& params, double lambda1, BetaCase c,
                                           std::optional<double> eps = std::nullopt) {
  check_case(params.beta, c);
  LyapunovParams l{};
  l.lambda1 = lambda1;
  l.beta_case = c;
  l.p = select_p(lambda1, params.alpha, params.beta);
  const GammaChoice g = select_gamma_young(l.p, lambda1, params.alpha, params.beta, c);
  l.gamma_young = g.gamma;
  l.delta = g.delta;
  l.zeta_const = g.zeta;
  l.gamma_lower = g.lower;
  l.gamma_upper = g.upper;
  l.rho = (l.p + 1.0) * std::pow(lambda1, 2.0 - params.beta) / (2.0 * params.alpha);
  l.a_exp = std::min(0.0, 1.0 - params.beta);
  l.eps = eps ? *eps : std::min(l.delta, l.zeta_const) / (10.0 * (1.0 + l.p + std::abs(l.rho)));
  l.young = young_constants(l, params.beta);
  return l;
}

inline WeightedForm lyapunov_correction_form(const SystemParams& params, const LyapunovParams& l) {
  const double b = params.beta;
  return {"H_eps correction",
          {{V, Z, -std::pow(l.lambda1, 2.0 - b), b - 4.0},
           {U, W, l.p * std::pow(l.lambda1, -l.a_exp), l.a_exp - 2.0},
           {W, V, l.rho, -2.0},
           {U, Z, -l.rho, -3.0}}};
}

inline WeightedForm H_eps_form(const SystemParams& params, const LyapunovParams& l) {
  const WeightedForm e = energy_form(params);
  const WeightedForm corr = lyapunov_correction_form(params, l).scaled(l.eps);
  std::vector<FormTerm> terms(e.terms().begin(), e.terms().end());
  terms.insert(terms.end(), corr.terms().begin(), corr.terms().end());
  return {"H_eps", std::move(terms)};
}

inline WeightedForm H_eps_derivative_form(const SystemParams& params, const LyapunovParams& l) {
  return H_eps_form(params, l).time_derivative(flow_terms(params), "H_eps'");
}

inline double H_eps(const ModalState& x, const SystemParams& params, const LyapunovParams& l,
                    const Spectrum& sp) {
  return H_eps_form(params, l).evaluate(x, sp);
}

inline double H_eps_derivative(const ModalState& x, const SystemParams& params, const LyapunovParams& l,
                               const Spectrum& sp) {
  return H_eps_derivative_form(params, l).evaluate(x, sp);
}

// ---------------------------------------------------------------------------

/// Geometric λ-grid from λ₁ to max_factor·λ₁.
inline std::vector<double> default_probe_grid(double lambda1, double max_factor = 1e6, int points_per_decade = 20) {
  if (!(lambda1 > 0.0) || !(max_factor >= 1.0) || points_per_decade < 1)
    throw std::invalid_argument("default_probe_grid: bad arguments");
  const double decades = std::log10(max_factor);
  const int n = std::max(1, static_cast<int>(std::ceil(decades * points_per_decade)));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) grid.push_back(lambda1 * std::pow(10.0, decades * k / n));
  grid.back() = lambda1 * max_factor;
  return grid;
}

struct ModeMargin {
  double lambda;
  double positivity;
  double domination;
};

struct CertificateReport {
  std::vector<ModeMargin> per_mode_margins;
  double uniform_gamma = 0.0;  // γ*: min domination margin
  double min_positivity = 0.0;
  double eps_used = 0.0;
  double p_used = 0.0;
  std::optional<LyapunovParams> lyap;
  BetaCase beta_case = BetaCase::lower;
  bool pass = false;
  std::optional<double> failing_lambda;  // smallest probed λ violating a condition
  double worst_lambda = 0.0;             // λ of the smallest margin
  int halvings = 0;
  std::string reason;
};

inline std::vector<double> probe_points(const Spectrum& spectrum, std::span<const double> grid) {
  std::vector<double> pts(spectrum.eigenvalues().begin(), spectrum.eigenvalues().end());
  pts.insert(pts.end(), grid.begin(), grid.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

namespace detail {

inline Vec4 diagonal_weights(const WeightedForm& diag_form, double lambda) {
  return diag_form.matrix_at(lambda).diagonal();
}

inline void summarize(CertificateReport& r) {
  r.min_positivity = r.per_mode_margins.empty() ? 0.0 : r.per_mode_margins.front().positivity;
  r.uniform_gamma = r.per_mode_margins.empty() ? 0.0 : r.per_mode_margins.front().domination;
  double worst = std::numeric_limits<double>::infinity();
  r.failing_lambda.reset();
  for (const ModeMargin& m : r.per_mode_margins) {
    r.min_positivity = std::min(r.min_positivity, m.positivity);
    r.uniform_gamma = std::min(r.uniform_gamma, m.domination);
    const double local = std::min(m.positivity, m.domination);
    if (local < worst) {
      worst = local;
      r.worst_lambda = m.lambda;
    }
    if (!(m.positivity > 0.0 && m.domination > 0.0) && !r.failing_lambda) r.failing_lambda = m.lambda;
  }
  r.pass = !r.per_mode_margins.empty() && !r.failing_lambda;
}

}  // namespace detail

/// Margins of one fixed H_ε over the given λ points.
inline std::vector<ModeMargin> certificate_margins(const SystemParams& params, const LyapunovParams& l,
                                                   std::span<const double> lambdas) {
  const WeightedForm h = H_eps_form(params, l);
  const WeightedForm d = H_eps_derivative_form(params, l).scaled(-1.0);
  const WeightedForm k = theorem_K_form(params.beta, l.beta_case);
  std::vector<ModeMargin> out;
  out.reserve(lambdas.size());
  for (double lam : lambdas) {
    const Vec4 kw = detail::diagonal_weights(k, lam);
    out.push_back({lam, min_generalized_eigenvalue(h.matrix_at(lam), kw),
                   min_generalized_eigenvalue(d.matrix_at(lam), kw)});
  }
  return out;
}

inline constexpr double kEpsFloor = 1e-12;

/// Searches ε and certifies H_ε uniformly over spectrum ∪ lambda_grid.
///
/// α = 0 violates the hypothesis of the decay theorem and throws
/// CertificateError. |α| at or above the coupling bound produces a failing
/// report whose margins are those of the unperturbed energy E.
inline CertificateReport certify(const SystemParams& params, const Spectrum& spectrum,
                                 std::span<const double> lambda_grid, std::optional<double> eps_init = std::nullopt,
                                 std::optional<BetaCase> beta_case = std::nullopt) {
  params.validate();
  if (params.alpha == 0.0) throw CertificateError("certify: alpha must be nonzero");
  const BetaCase c = resolve_case(params.beta, beta_case);
  const std::vector<double> lambdas = probe_points(spectrum, lambda_grid);

  CertificateReport report;
  report.beta_case = c;

  if (!is_admissible(params, spectrum)) {
    const WeightedForm e = energy_form(params);
    const WeightedForm d = e.time_derivative(flow_terms(params)).scaled(-1.0);
    const WeightedForm k = theorem_K_form(params.beta, c);
    for (double lam : lambdas) {
      const Vec4 kw = detail::diagonal_weights(k, lam);
      report.per_mode_margins.push_back({lam, min_generalized_eigenvalue(e.matrix_at(lam), kw),
                                         min_generalized_eigenvalue(d.matrix_at(lam), kw)});
    }
    detail::summarize(report);
    report.pass = false;
    for (const ModeMargin& m : report.per_mode_margins)
      if (!(m.positivity > 0.0)) {
        report.failing_lambda = m.lambda;
        break;
      }
    report.reason = "|alpha| is not below the coupling bound; the energy is not positive definite";
    return report;
  }

  LyapunovParams l = make_lyapunov_params(params, spectrum.lambda1(), c, eps_init);
  report.p_used = l.p;
  for (;;) {
    report.per_mode_margins = certificate_margins(params, l, lambdas);
    detail::summarize(report);
    report.eps_used = l.eps;
    report.lyap = l;
    if (report.pass) {
      report.reason = "certified";
      return report;
    }
    if (l.eps / 2.0 < kEpsFloor) {
      report.reason = "epsilon fell below the floor without a certificate";
      return report;
    }
    l.eps /= 2.0;
    ++report.halvings;
  }
}

/// (λ₁^{(3-2β)/2} + |α|) / ((λ₁^{(3-2β)/2} - |α|) γ*) · H_ε(0): the bound on t·K(t).
inline double polynomial_bound_ceiling(const SystemParams& params, const Spectrum& spectrum, double gamma_star,
                                       double h0) {
  const double bound = coupling_bound(spectrum, params.beta);
  const double a = std::abs(params.alpha);
  return (bound + a) / ((bound - a) * gamma_star) * h0;
}

/// Certifies each α = f·bound; used to map the empirically admissible range.
inline std::vector<bool> certified_alpha_fractions(SystemParams params, const Spectrum& spectrum,
                                                   std::span<const double> fractions,
                                                   std::span<const double> lambda_grid) {
  std::vector<bool> out;
  out.reserve(fractions.size());
  const double bound = coupling_bound(spectrum, params.beta);
  for (double f : fractions) {
    params.alpha = f * bound;
    out.push_back(params.alpha != 0.0 && certify(params, spectrum, lambda_grid).pass);
  }
  return out;
}

}  // namespace cdecay
