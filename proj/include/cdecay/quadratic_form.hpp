/*
 * quadratic_form.hpp: modal quadratic forms as symbolic λ-power sums.
 *
 * A WeightedForm is Q(x) = Σₙ Σ_terms coeff·λₙ^power·xₙ[i]·xₙ[j]. Every
 * energy, norm and Lyapunov functional in the library is one of these, and
 * time derivatives along the flow are taken on the terms themselves: like
 * terms are merged exactly, so identities such as E' = -b‖u'‖² hold in the
 * coefficients rather than through floating-point cancellation of large
 * matrix entries.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cdecay/propagator.hpp"
#include "cdecay/spectral_core.hpp"

namespace cdecay {

struct FormTerm {
  Component i;
  Component j;
  double coeff;
  double power;
};

class BoundForm;

class WeightedForm {
 public:
  WeightedForm() = default;
  WeightedForm(std::string description, std::vector<FormTerm> terms)
      : description_(std::move(description)), terms_(canonicalize(std::move(terms))) {}

  const std::string& description() const { return description_; }
  std::span<const FormTerm> terms() const { return terms_; }

  double evaluate_mode(double lambda, const Vec4& x) const {
    double acc = 0.0;
    for (const FormTerm& t : terms_) acc += t.coeff * lambda_power(lambda, t.power) * x(t.i) * x(t.j);
    return acc;
  }

  /// Symmetric S with Q(x) = xᵀ S x for a mode with eigenvalue λ.
  Mat4 matrix_at(double lambda) const {
    Mat4 s = Mat4::Zero();
    for (const FormTerm& t : terms_) {
      const double v = t.coeff * lambda_power(lambda, t.power);
      if (t.i == t.j) {
        s(t.i, t.i) += v;
      } else {
        s(t.i, t.j) += 0.5 * v;
        s(t.j, t.i) += 0.5 * v;
      }
    }
    return s;
  }

  /// Sum over modes in ascending index order.
  double evaluate(const ModalState& state, const Spectrum& spectrum) const {
    check_dimensions(state, spectrum);
    double acc = 0.0;
    for (std::size_t n = 0; n < spectrum.n_modes(); ++n) acc += evaluate_mode(spectrum[n], state.mode(n));
    return acc;
  }

  /// d/dt Q along ẋ = M(λ)x, with M given by its flow terms.
  WeightedForm time_derivative(std::span<const FlowTerm> flow, std::string description = {}) const {
    std::vector<FormTerm> out;
    for (const FormTerm& t : terms_) {
      for (const FlowTerm& f : flow) {
        if (f.target == t.i) out.push_back({f.source, t.j, t.coeff * f.coeff, t.power + f.power});
        if (f.target == t.j) out.push_back({t.i, f.source, t.coeff * f.coeff, t.power + f.power});
      }
    }
    if (description.empty()) description = "d/dt " + description_;
    return {std::move(description), std::move(out)};
  }

  /// λ^dpower · Q, termwise.
  WeightedForm shifted(double dpower, std::string description = {}) const {
    std::vector<FormTerm> out(terms_.begin(), terms_.end());
    for (FormTerm& t : out) t.power += dpower;
    return {description.empty() ? description_ : std::move(description), std::move(out)};
  }

  WeightedForm scaled(double factor, std::string description = {}) const {
    std::vector<FormTerm> out(terms_.begin(), terms_.end());
    for (FormTerm& t : out) t.coeff *= factor;
    return {description.empty() ? description_ : std::move(description), std::move(out)};
  }

  friend WeightedForm operator+(const WeightedForm& a, const WeightedForm& b) {
    std::vector<FormTerm> out(a.terms_.begin(), a.terms_.end());
    out.insert(out.end(), b.terms_.begin(), b.terms_.end());
    return {a.description_ + " + " + b.description_, std::move(out)};
  }

  bool is_diagonal() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const FormTerm& t) { return t.i == t.j; });
  }

  BoundForm bind(const Spectrum& spectrum) const;

 private:
  static bool same_power(double p, double q) { return std::abs(p - q) <= 1e-12 * (1.0 + std::abs(p)); }

  static std::vector<FormTerm> canonicalize(std::vector<FormTerm> in) {
    std::vector<FormTerm> out;
    for (FormTerm t : in) {
      if (t.j < t.i) std::swap(t.i, t.j);
      auto it = std::find_if(out.begin(), out.end(), [&](const FormTerm& o) {
        return o.i == t.i && o.j == t.j && same_power(o.power, t.power);
      });
      if (it == out.end())
        out.push_back(t);
      else
        it->coeff += t.coeff;
    }
    std::erase_if(out, [](const FormTerm& t) { return t.coeff == 0.0; });
    return out;
  }

  std::string description_;
  std::vector<FormTerm> terms_;
};

/// A form with its λ-weights precomputed for one spectrum; used on trajectories.
class BoundForm {
 public:
  BoundForm(WeightedForm form, const Spectrum& spectrum)
      : form_(std::move(form)), n_modes_(spectrum.n_modes()) {
    const auto terms = form_.terms();
    weights_.reserve(n_modes_ * terms.size());
    for (double lam : spectrum.eigenvalues())
      for (const FormTerm& t : terms) weights_.push_back(t.coeff * lambda_power(lam, t.power));
  }

  const WeightedForm& form() const { return form_; }

  double operator()(const ModalState& state) const {
    if (state.n_modes() != n_modes_)
      throw std::invalid_argument("BoundForm: state dimension does not match spectrum");
    const auto terms = form_.terms();
    double acc = 0.0;
    std::size_t k = 0;
    for (std::size_t n = 0; n < n_modes_; ++n) {
      const auto row = state.coeffs.row(static_cast<Eigen::Index>(n));
      for (const FormTerm& t : terms) acc += weights_[k++] * row(t.i) * row(t.j);
    }
    return acc;
  }

 private:
  WeightedForm form_;
  std::size_t n_modes_;
  std::vector<double> weights_;
};

inline BoundForm WeightedForm::bind(const Spectrum& spectrum) const { return {*this, spectrum}; }

// ---------------------------------------------------------------------------

namespace detail {

inline bool scaled_positive_definite(const Mat4& c) {
  const Vec4 d = c.diagonal();
  for (int k = 0; k < 4; ++k)
    if (!(d(k) > 0.0) || !std::isfinite(d(k))) return false;
  const Vec4 s = d.cwiseSqrt().cwiseInverse();
  const Mat4 unit = s.asDiagonal() * c * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat4> es(unit, Eigen::EigenvaluesOnly);
  return es.info() == Eigen::Success && es.eigenvalues()(0) > 0.0;
}

}  // namespace detail

/// Smallest c with xᵀAx ≥ c·xᵀBx for all x, B = diag(b) positive.
///
/// Entries of the per-mode forms span many orders of magnitude at large λ, so
/// a plain eigenvalue solve on B^{-1/2}AB^{-1/2} loses the small end of the
/// spectrum. Instead c is bracketed by bisection on the positive definiteness
/// of A − cB, each test done on the diagonally equilibrated matrix. The value
/// returned is the lower end of the final bracket.
inline double min_generalized_eigenvalue(const Mat4& a, const Vec4& b) {
  for (int k = 0; k < 4; ++k)
    if (!(b(k) > 0.0)) throw std::invalid_argument("min_generalized_eigenvalue: b must be positive");
  if (!a.allFinite()) throw std::invalid_argument("min_generalized_eigenvalue: non-finite form");

  const Mat4 bm = b.asDiagonal();
  auto pd = [&](double c) { return detail::scaled_positive_definite(a - c * bm); };

  double hi = (a.diagonal().array() / b.array()).minCoeff();
  double lo = 0.0;
  if (pd(0.0)) {
    lo = 0.5 * hi;
    while (!pd(lo)) {
      hi = lo;
      lo *= 0.5;
      if (lo < std::numeric_limits<double>::min()) return 0.0;
    }
  } else {
    hi = std::min(hi, 0.0);
    lo = -1.0;
    while (!pd(lo)) {
      hi = lo;
      lo *= 2.0;
      if (lo < -1e300) return -std::numeric_limits<double>::infinity();
    }
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(std::abs(lo), std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (pd(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace cdecay
