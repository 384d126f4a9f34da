/*
 * scalar_case.hpp: the two-oscillator model problem
 *
 *   u'' + u' + λu + cv = 0,   v'' + μv + cu = 0,   0 < c² < λμ,
 *
 * with its Lyapunov function
 *
 *   H_ε = ℰ - εvv' + 2εuu' + (3ε/2c)(μu'v - λuv').
 *
 * General damping b·u' reduces to this case through the time change s = b·t,
 * which maps (λ, μ, c) to (λ, μ, c)/b².
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cdecay/expm.hpp"
#include "cdecay/quadratic_form.hpp"
#include "cdecay/spectral_core.hpp"

namespace cdecay {

struct ScalarParams {
  double lambda = 1.0;
  double mu = 1.0;
  double c = 0.0;

  bool is_valid() const { return lambda > 0.0 && mu > 0.0 && c != 0.0 && c * c < lambda * mu; }

  void validate() const {
    if (!(lambda > 0.0) || !(mu > 0.0)) throw std::domain_error("ScalarParams: lambda and mu must be positive");
    if (!(c * c > 0.0 && c * c < lambda * mu))
      throw std::domain_error("ScalarParams: coupling must satisfy 0 < c^2 < lambda*mu");
  }

  bool operator==(const ScalarParams&) const = default;
};

inline std::vector<FlowTerm> scalar_flow_terms(const ScalarParams& s) {
  return {{U, W, 1.0, 0.0},  {V, Z, 1.0, 0.0},   {W, U, -s.lambda, 0.0}, {W, V, -s.c, 0.0},
          {W, W, -1.0, 0.0}, {Z, U, -s.c, 0.0},  {Z, V, -s.mu, 0.0}};
}

/// [[0,0,1,0],[0,0,0,1],[-λ,-c,-1,0],[-c,-μ,0,0]]; defined for any real parameters.
inline Mat4 scalar_companion(const ScalarParams& s) {
  Mat4 m = Mat4::Zero();
  for (const FlowTerm& t : scalar_flow_terms(s)) m(t.target, t.source) += t.coeff;
  return m;
}

/// Largest real part of the companion eigenvalues.
inline double spectral_abscissa(const Mat4& m) {
  Eigen::EigenSolver<Mat4> es(m, false);
  if (es.info() != Eigen::Success) throw std::runtime_error("spectral_abscissa: eigenvalue solve failed");
  return es.eigenvalues().real().maxCoeff();
}

// Scalar forms use a unit "eigenvalue" slot: all powers are zero.
inline constexpr double kScalarSlot = 1.0;

inline WeightedForm scalar_K_form(const ScalarParams& s) {
  return {"K", {{U, U, 0.5 * s.lambda, 0.0}, {V, V, 0.5 * s.mu, 0.0}, {W, W, 0.5, 0.0}, {Z, Z, 0.5, 0.0}}};
}

inline WeightedForm scalar_energy_form(const ScalarParams& s) {
  const WeightedForm k = scalar_K_form(s);
  std::vector<FormTerm> terms(k.terms().begin(), k.terms().end());
  terms.push_back({U, V, s.c, 0.0});
  return {"E", std::move(terms)};
}

inline WeightedForm scalar_H_form(const ScalarParams& s, double eps) {
  if (s.c == 0.0) throw std::domain_error("scalar_H_eps: coupling c must be nonzero");
  const WeightedForm e = scalar_energy_form(s);
  std::vector<FormTerm> terms(e.terms().begin(), e.terms().end());
  const double k = 3.0 * eps / (2.0 * s.c);
  terms.push_back({V, Z, -eps, 0.0});
  terms.push_back({U, W, 2.0 * eps, 0.0});
  terms.push_back({W, V, k * s.mu, 0.0});
  terms.push_back({U, Z, -k * s.lambda, 0.0});
  return {"H_eps", std::move(terms)};
}

inline WeightedForm scalar_H_derivative_form(const ScalarParams& s, double eps) {
  return scalar_H_form(s, eps).time_derivative(scalar_flow_terms(s), "H_eps'");
}

struct ScalarEnergy {
  double E;
  double K;
};

inline ScalarEnergy scalar_energy(const Vec4& x, const ScalarParams& s) {
  return {scalar_energy_form(s).evaluate_mode(kScalarSlot, x), scalar_K_form(s).evaluate_mode(kScalarSlot, x)};
}

inline double scalar_H_eps(const Vec4& x, const ScalarParams& s, double eps) {
  return scalar_H_form(s, eps).evaluate_mode(kScalarSlot, x);
}

inline double scalar_H_eps_derivative(const Vec4& x, const ScalarParams& s, double eps) {
  return scalar_H_derivative_form(s, eps).evaluate_mode(kScalarSlot, x);
}

struct ScalarConstants {
  double C1;
  double C2;
  double eps1;  // root of C1(ε) = 0
};

inline ScalarConstants scalar_C1_C2_eps1(const ScalarParams& s, double eps) {
  s.validate();
  if (!(eps >= 0.0)) throw std::domain_error("scalar_C1_C2_eps1: eps must be >= 0");
  const double root = std::sqrt(s.lambda * s.mu);
  const double lo = std::min(std::sqrt(s.lambda), std::sqrt(s.mu));
  const double hi = std::max(std::sqrt(s.lambda), std::sqrt(s.mu));
  const double slope = 2.0 / lo + 3.0 / (2.0 * std::abs(s.c)) * hi;
  const double head_lo = (root - std::abs(s.c)) / root;
  const double head_hi = (root + std::abs(s.c)) / root;
  return {head_lo - eps * slope, head_hi + eps * slope, head_lo / slope};
}

/// Young constants of the three cross-term splittings (documentation only).
struct ScalarYoung {
  double c1;
  double c2;
  double c3;
};

inline ScalarYoung scalar_young_constants(const ScalarParams& s) {
  s.validate();
  const double gap = s.lambda * s.mu - s.c * s.c;
  const double c2sq = s.c * s.c;
  return {8.0 * s.mu / gap, 9.0 * s.lambda * s.mu * s.mu / (2.0 * c2sq * gap),
          9.0 * (s.mu - s.lambda) * (s.mu - s.lambda) / (8.0 * c2sq)};
}

/// ε = ½ min(ε₁, 1/(2 + c₁ + c₂ + c₃)): inside (0, ε₁) and small enough for
/// the u'² coefficient of H_ε' to stay negative.
inline double scalar_select_eps(const ScalarParams& s) {
  const ScalarConstants k = scalar_C1_C2_eps1(s, 0.0);
  const ScalarYoung y = scalar_young_constants(s);
  return 0.5 * std::min(k.eps1, 1.0 / (2.0 + y.c1 + y.c2 + y.c3));
}

/// Measured constants of the scalar certificate at a given ε.
struct ScalarCertificate {
  double eps;
  double positivity;  // min generalized eigenvalue of (H_ε, K)
  double C3;          // min generalized eigenvalue of (-H_ε', K)
  double C2;
};

inline ScalarCertificate scalar_certificate(const ScalarParams& s, double eps) {
  const Vec4 kw = scalar_K_form(s).matrix_at(kScalarSlot).diagonal();
  return {eps, min_generalized_eigenvalue(scalar_H_form(s, eps).matrix_at(kScalarSlot), kw),
          min_generalized_eigenvalue(scalar_H_derivative_form(s, eps).scaled(-1.0).matrix_at(kScalarSlot), kw),
          scalar_C1_C2_eps1(s, eps).C2};
}

struct ScalarSample {
  double t;
  Vec4 x;
};

inline std::vector<ScalarSample> scalar_trajectory(const ScalarParams& s, const Vec4& init, double t_end,
                                                   int n_steps) {
  if (!(t_end > 0.0) || n_steps < 1) throw std::domain_error("scalar_trajectory: need t_end > 0, n_steps >= 1");
  const Mat4 step = expm4(scalar_companion(s), t_end / n_steps);
  std::vector<ScalarSample> out;
  out.reserve(static_cast<std::size_t>(n_steps) + 1);
  Vec4 x = init;
  out.push_back({0.0, x});
  for (int k = 1; k <= n_steps; ++k) {
    x = step * x;
    out.push_back({t_end * k / n_steps, x});
  }
  return out;
}

/// Least-squares slope of y against t.
inline double regression_slope(std::span<const double> t, std::span<const double> y) {
  const std::size_t n = t.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("regression_slope: need >= 2 aligned samples");
  double mt = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mt += t[k];
    my += y[k];
  }
  mt /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxy += (t[k] - mt) * (y[k] - my);
    sxx += (t[k] - mt) * (t[k] - mt);
  }
  return sxy / sxx;
}

struct DecayRates {
  double measured_rate;
  double oracle_rate;
};

/// Slope of log K over [t_end/2, t_end] against twice the spectral abscissa.
/// Accepts any positive λ, μ and nonzero c so that unstable couplings can be
/// probed as negative controls.
inline DecayRates scalar_decay_check(const ScalarParams& s, const Vec4& init, double t_end, int n_steps = 4000) {
  if (!(s.lambda > 0.0) || !(s.mu > 0.0)) throw std::domain_error("scalar_decay_check: lambda, mu must be positive");
  const WeightedForm kform = scalar_K_form(s);
  if (!(kform.evaluate_mode(kScalarSlot, init) > 0.0)) throw std::domain_error("scalar_decay_check: K(0) = 0");
  std::vector<double> ts, logk;
  for (const ScalarSample& smp : scalar_trajectory(s, init, t_end, n_steps)) {
    if (smp.t < 0.5 * t_end) continue;
    ts.push_back(smp.t);
    logk.push_back(std::log(kform.evaluate_mode(kScalarSlot, smp.x)));
  }
  return {regression_slope(ts, logk), 2.0 * spectral_abscissa(scalar_companion(s))};
}

}  // namespace cdecay
