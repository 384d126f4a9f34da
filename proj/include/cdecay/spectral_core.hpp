/*
 * spectral_core.hpp: operator model for the coupled system
 *
 *   u'' + b u' + A u + α A^β v = 0
 *   v'' + A₂ v + α A^β u = 0,        A₂ = A² + ζ_pert A
 *
 * Everything is diagonal in the eigenbasis of A, so the operator is represented
 * by its (truncated) spectrum and each eigenvalue λ carries an independent
 * 4-dimensional block over the state ordering (u, v, u', v').
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cdecay {

/// Slot of a quantity inside a modal block: u, v, w = u', z = v'.
enum Component : int { U = 0, V = 1, W = 2, Z = 3 };

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

/// λ^s. Small integer powers go through multiplication so that every object
/// assembled from the same symbolic term gets bit-identical numbers.
inline double lambda_power(double lambda, double s) {
  if (s == 0.0) return 1.0;
  if (s == 1.0) return lambda;
  if (s == 2.0) return lambda * lambda;
  if (s == -1.0) return 1.0 / lambda;
  if (s == -2.0) return 1.0 / (lambda * lambda);
  return std::pow(lambda, s);
}

class Spectrum {
 public:
  explicit Spectrum(std::vector<double> eigenvalues, std::string label = {})
      : eigenvalues_(std::move(eigenvalues)), label_(std::move(label)) {
    if (eigenvalues_.empty()) throw std::invalid_argument("Spectrum: eigenvalue list is empty");
    for (std::size_t n = 0; n < eigenvalues_.size(); ++n) {
      const double lam = eigenvalues_[n];
      if (!std::isfinite(lam) || lam <= 0.0)
        throw std::invalid_argument("Spectrum: eigenvalue " + std::to_string(n) +
                                    " is not a finite positive number");
      if (n > 0 && lam < eigenvalues_[n - 1])
        throw std::invalid_argument("Spectrum: eigenvalues must be sorted nondecreasing");
    }
  }

  std::span<const double> eigenvalues() const { return eigenvalues_; }
  std::size_t n_modes() const { return eigenvalues_.size(); }
  /// Sharp coercivity constant of A.
  double lambda1() const { return eigenvalues_.front(); }
  double operator[](std::size_t n) const { return eigenvalues_[n]; }
  const std::string& label() const { return label_; }

  bool operator==(const Spectrum&) const = default;

 private:
  std::vector<double> eigenvalues_;
  std::string label_;
};

inline constexpr double kBetaMax = 1.5;

inline bool beta_in_range(double beta) { return beta >= 0.0 && beta <= kBetaMax; }

/// Physical parameters. α = 0 is representable (conservation experiments) but
/// never admissible.
struct SystemParams {
  double alpha = 0.0;
  double beta = 0.0;
  double damping_b = 1.0;
  double zeta_pert = 0.0;

  void validate() const {
    if (!std::isfinite(alpha)) throw std::domain_error("SystemParams: alpha must be finite");
    if (!beta_in_range(beta)) throw std::domain_error("SystemParams: beta must lie in [0, 3/2]");
    if (!(damping_b > 0.0) || !std::isfinite(damping_b))
      throw std::domain_error("SystemParams: damping_b must be positive");
    if (!(zeta_pert >= 0.0) || !std::isfinite(zeta_pert))
      throw std::domain_error("SystemParams: zeta_pert must be nonnegative");
  }

  bool operator==(const SystemParams&) const = default;
};

/// λ₁^{(3-2β)/2}: the strict upper bound on |α|.
inline double coupling_bound(const Spectrum& spectrum, double beta) {
  if (!beta_in_range(beta)) throw std::domain_error("coupling_bound: beta must lie in [0, 3/2]");
  return std::pow(spectrum.lambda1(), (3.0 - 2.0 * beta) / 2.0);
}

inline bool is_admissible(const SystemParams& params, const Spectrum& spectrum) {
  if (!beta_in_range(params.beta) || !std::isfinite(params.alpha)) return false;
  return params.alpha != 0.0 && std::abs(params.alpha) < coupling_bound(spectrum, params.beta);
}

inline std::vector<double> frac_power_weights(const Spectrum& spectrum, double s) {
  std::vector<double> out;
  out.reserve(spectrum.n_modes());
  for (double lam : spectrum.eigenvalues()) out.push_back(lambda_power(lam, s));
  return out;
}

/// One entry of the linear vector field: d/dt x[target] += coeff·λ^power·x[source].
struct FlowTerm {
  Component target;
  Component source;
  double coeff;
  double power;
};

/// Per-mode vector field of the first-order system, as symbolic λ-power terms.
inline std::vector<FlowTerm> flow_terms(const SystemParams& p) {
  std::vector<FlowTerm> terms{
      {U, W, 1.0, 0.0},
      {V, Z, 1.0, 0.0},
      {W, U, -1.0, 1.0},
      {W, V, -p.alpha, p.beta},
      {W, W, -p.damping_b, 0.0},
      {Z, U, -p.alpha, p.beta},
      {Z, V, -1.0, 2.0},
  };
  if (p.zeta_pert != 0.0) terms.push_back({Z, V, -p.zeta_pert, 1.0});
  return terms;
}

struct ModeMatrix {
  double lambda;
  Mat4 entries;
};

inline ModeMatrix mode_matrix(double lambda, const SystemParams& params) {
  if (!(lambda > 0.0)) throw std::domain_error("mode_matrix: lambda must be positive");
  Mat4 m = Mat4::Zero();
  for (const FlowTerm& t : flow_terms(params))
    m(t.target, t.source) += t.coeff * lambda_power(lambda, t.power);
  return {lambda, m};
}

/// Determinant of the (u, v) block of the per-mode energy, up to the factor ¼:
/// λ·(λ² + ζ_pert λ) − α²λ^{2β}. Positive iff the mode energy is positive definite.
inline double mode_energy_determinant(double lambda, const SystemParams& params) {
  const double a2 = lambda * lambda + params.zeta_pert * lambda;
  const double c = params.alpha * lambda_power(lambda, params.beta);
  return lambda * a2 - c * c;
}

}  // namespace cdecay
