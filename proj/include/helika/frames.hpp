#pragma once

#include "helika/linalg.hpp"

namespace helika {

/// |I x k| / |k| below this is treated as lying on the singular line.
inline constexpr double kSingularThreshold = 1e-9;

/// Local polarization triad fixed by the Berry vector I: v = I x k / |I x k|, u = v x w.
struct Frame {
  Vec3 u, v, w;
  Vec3 I, k;
};

/// The real 3x2 matrix with columns (u, v). Its transpose maps lab vectors to
/// two-component amplitudes; on transverse vectors the pair acts as an isometry.
struct QuasiUnitary {
  Mat32 m;

  Vec3 u() const { return m.col(0); }
  Vec3 v() const { return m.col(1); }
  CVec3 lift(const C2& a) const { return m.cast<Complex>() * a; }
  C2 project(const CVec3& f) const { return m.transpose().cast<Complex>() * f; }
};

Frame polarization_frame(const Vec3& I, const Vec3& k);
QuasiUnitary quasi_unitary(const Frame& frame);

/// (Sigma_w)_{ij} = -i eps_{ijk} w_k, the lab-side helicity matrix.
Mat3c helicity_matrix_lab(const Vec3& w);

/// Spin matrices (Sigma_k)_{ij} = -i eps_{ijk}.
Mat3c spin_matrix(int axis);

/// Angle phi in (-pi, pi] with varpi_{I'} = varpi_I R(phi).
double frame_rotation_angle(const Vec3& I, const Vec3& I_prime, const Vec3& k);

/// R(phi) = [[cos, -sin], [sin, cos]] = exp(-i sigma phi).
Eigen::Matrix2d rotation2(double phi);

/// Circular-polarization matrix varpi [[1, 1], [i, -i]] / sqrt(2).
Eigen::Matrix<Complex, 3, 2> circular_quasi_unitary(const QuasiUnitary& q);

/// Berry potential A_I(k) = (I.k) / (k |I x k|) v_I.
Vec3 berry_vector(const Vec3& I, const Vec3& k);

/// Rodrigues rotation of a complex 3-vector about unit axis `w` by `angle`.
CVec3 rotate_about(const Vec3& w, double angle, const CVec3& f);

}  // namespace helika
