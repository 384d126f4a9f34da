#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace cdecay {

namespace detail {

// Padé [13/13] coefficients and the 1-norm threshold below which the
// approximant is accurate to unit roundoff (Higham, SIAM J. Matrix Anal. 2005).
inline constexpr std::array<double, 14> kPade13{
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};
inline constexpr double kTheta13 = 5.371920351148152;
inline constexpr int kMaxSquarings = 1000;

}  // namespace detail

/// exp(a) for a fixed-size square matrix by scaling and squaring with a
/// degree-13 Padé kernel. Throws std::range_error when the result overflows.
template <int N>
Eigen::Matrix<double, N, N> expm(const Eigen::Matrix<double, N, N>& a) {
  using Mat = Eigen::Matrix<double, N, N>;
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(norm)) throw std::range_error("expm: matrix has non-finite entries");
  if (norm == 0.0) return Mat::Identity();

  int squarings = 0;
  if (norm > detail::kTheta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / detail::kTheta13)));
    if (squarings > detail::kMaxSquarings) throw std::range_error("expm: norm too large");
  }
  const Mat x = a * std::ldexp(1.0, -squarings);
  const auto& b = detail::kPade13;
  const Mat id = Mat::Identity();
  const Mat x2 = x * x;
  const Mat x4 = x2 * x2;
  const Mat x6 = x4 * x2;
  const Mat u = x * (x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 +
                     b[3] * x2 + b[1] * id);
  const Mat v =
      x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * id;
  Mat r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) r = (r * r).eval();
  if (!r.allFinite()) throw std::range_error("expm: result overflowed");
  return r;
}

/// exp(dt·m) for a 4×4 block; dt must be nonnegative.
inline Eigen::Matrix4d expm4(const Eigen::Matrix4d& m, double dt) {
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw std::domain_error("expm4: dt must be >= 0");
  return expm<4>((dt * m).eval());
}

}  // namespace cdecay
