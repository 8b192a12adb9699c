#pragma once

#include <complex>

#include <Eigen/Dense>

namespace helika {

using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using C2 = Eigen::Vector2cd;
using Mat32 = Eigen::Matrix<double, 3, 2>;
using Mat2c = Eigen::Matrix2cd;
using Mat3c = Eigen::Matrix3cd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr Complex kI{0.0, 1.0};

/// The constant helicity matrix [[0, -i], [i, 0]] of the intrinsic representation.
inline Mat2c pauli_sigma() {
  Mat2c s;
  s << 0.0, -kI, kI, 0.0;
  return s;
}

/// Helicity eigenvectors (1, +-i)/sqrt(2).
inline C2 alpha(int sigma) {
  const double r = 1.0 / std::sqrt(2.0);
  return C2(Complex(r, 0.0), Complex(0.0, sigma > 0 ? r : -r));
}

/// sigma * x without forming the matrix.
inline C2 apply_sigma(const C2& x) { return C2(-kI * x(1), kI * x(0)); }

inline Vec3 unit(int axis) { return Vec3::Unit(axis); }

/// Plain (non-conjugating) cross product a x b. Eigen's cross() conjugates complex results.
inline CVec3 cross(const CVec3& a, const CVec3& b) {
  return CVec3(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]);
}

inline CVec3 cross(const Vec3& a, const CVec3& b) { return cross(CVec3(a.cast<Complex>()), b); }

}  // namespace helika
