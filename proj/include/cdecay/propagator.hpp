/*
 * propagator.hpp: exact time evolution of the modal blocks.
 *
 * The system is linear with constant coefficients, so the solution operator
 * over a step dt is exp(dt·Mₙ) for each mode. Step operators are built once
 * per (params, spectrum, dt) and reused.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdecay/expm.hpp"
#include "cdecay/spectral_core.hpp"

namespace cdecay {

using ModalCoeffs = Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor>;

/// Full system state: row n holds (uₙ, vₙ, u'ₙ, v'ₙ).
struct ModalState {
  double time = 0.0;
  ModalCoeffs coeffs;

  std::size_t n_modes() const { return static_cast<std::size_t>(coeffs.rows()); }
  Vec4 mode(std::size_t n) const { return coeffs.row(static_cast<Eigen::Index>(n)).transpose(); }

  bool all_finite() const { return std::isfinite(time) && coeffs.allFinite(); }
};

inline ModalState zero_state(const Spectrum& spectrum) {
  return {0.0, ModalCoeffs::Zero(static_cast<Eigen::Index>(spectrum.n_modes()), 4)};
}

inline void check_dimensions(const ModalState& state, const Spectrum& spectrum) {
  if (state.n_modes() != spectrum.n_modes())
    throw std::invalid_argument("state has " + std::to_string(state.n_modes()) +
                                " modes but spectrum has " + std::to_string(spectrum.n_modes()));
}

class StepOperator {
 public:
  StepOperator(const SystemParams& params, const Spectrum& spectrum, double dt) : dt_(dt) {
    if (!(dt >= 0.0)) throw std::domain_error("StepOperator: dt must be >= 0");
    blocks_.reserve(spectrum.n_modes());
    for (double lam : spectrum.eigenvalues())
      blocks_.push_back(expm4(mode_matrix(lam, params).entries, dt));
  }

  double dt() const { return dt_; }
  const Mat4& block(std::size_t n) const { return blocks_[n]; }

  ModalState apply(const ModalState& state) const {
    if (state.n_modes() != blocks_.size())
      throw std::invalid_argument("StepOperator: state dimension does not match spectrum");
    ModalState out{state.time + dt_, ModalCoeffs(state.coeffs.rows(), 4)};
    for (std::size_t n = 0; n < blocks_.size(); ++n) {
      const auto row = static_cast<Eigen::Index>(n);
      out.coeffs.row(row) = (blocks_[n] * state.coeffs.row(row).transpose()).transpose();
    }
    return out;
  }

 private:
  double dt_;
  std::vector<Mat4> blocks_;
};

inline ModalState propagate(const ModalState& state, const SystemParams& params,
                            const Spectrum& spectrum, double dt) {
  if (!(dt > 0.0)) throw std::domain_error("propagate: dt must be positive");
  check_dimensions(state, spectrum);
  return StepOperator(params, spectrum, dt).apply(state);
}

struct Trajectory {
  std::vector<double> times;
  std::vector<ModalState> states;
  SystemParams params;
  Spectrum spectrum;

  std::size_t size() const { return times.size(); }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

/// Samples the exact solution on the uniform grid tₖ = k·t_end/n_steps.
/// The trajectory clock starts at 0 whatever init.time holds.
inline Trajectory run_trajectory(const ModalState& init, const SystemParams& params,
                                 const Spectrum& spectrum, double t_end, int n_steps) {
  if (!(t_end > 0.0)) throw std::domain_error("run_trajectory: t_end must be positive");
  if (n_steps < 1) throw std::domain_error("run_trajectory: n_steps must be >= 1");
  check_dimensions(init, spectrum);

  const StepOperator step(params, spectrum, t_end / n_steps);
  Trajectory traj{{}, {}, params, spectrum};
  traj.times.reserve(static_cast<std::size_t>(n_steps) + 1);
  traj.states.reserve(static_cast<std::size_t>(n_steps) + 1);

  ModalState x{0.0, init.coeffs};
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  for (int k = 1; k <= n_steps; ++k) {
    x = step.apply(x);
    x.time = t_end * static_cast<double>(k) / static_cast<double>(n_steps);
    traj.times.push_back(x.time);
    traj.states.push_back(x);
  }
  return traj;
}

}  // namespace cdecay
