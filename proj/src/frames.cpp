#include "helika/frames.hpp"

#include <cmath>

#include "helika/error.hpp"

namespace helika {

Frame polarization_frame(const Vec3& I, const Vec3& k) {
  const double kn = k.norm();
  if (!(kn > 0.0)) throw Error(ErrorCode::InvalidArgument, "polarization frame needs k != 0");
  const Vec3 Ixk = I.cross(k);
  const double s = Ixk.norm();
  if (s / kn < kSingularThreshold)
    throw Error(ErrorCode::SingularLine, "k lies on the singular line of I");
  Frame f;
  f.I = I;
  f.k = k;
  f.w = k / kn;
  f.v = Ixk / s;
  f.u = f.v.cross(f.w);
  return f;
}

QuasiUnitary quasi_unitary(const Frame& frame) {
  QuasiUnitary q;
  q.m.col(0) = frame.u;
  q.m.col(1) = frame.v;
  return q;
}

Mat3c helicity_matrix_lab(const Vec3& w) {
  Mat3c m;
  m << 0.0, -kI * w.z(), kI * w.y(),
       kI * w.z(), 0.0, -kI * w.x(),
       -kI * w.y(), kI * w.x(), 0.0;
  return m;
}

Mat3c spin_matrix(int axis) { return helicity_matrix_lab(Vec3::Unit(axis)); }

double frame_rotation_angle(const Vec3& I, const Vec3& I_prime, const Vec3& k) {
  if (I == I_prime) return 0.0;
  const Frame a = polarization_frame(I, k);
  const Frame b = polarization_frame(I_prime, k);
  return std::atan2(b.u.dot(a.v), b.u.dot(a.u));
}

Eigen::Matrix2d rotation2(double phi) {
  Eigen::Matrix2d r;
  const double c = std::cos(phi), s = std::sin(phi);
  r << c, -s, s, c;
  return r;
}

Eigen::Matrix<Complex, 3, 2> circular_quasi_unitary(const QuasiUnitary& q) {
  Eigen::Matrix2cd t;
  t << 1.0, 1.0, kI, -kI;
  return q.m.cast<Complex>() * t / std::sqrt(2.0);
}

Vec3 berry_vector(const Vec3& I, const Vec3& k) {
  const Vec3 Ixk = I.cross(k);
  const double s = Ixk.norm();
  // (I.k) / (k |I x k|) * (I x k) / |I x k|
  return (I.dot(k) / (k.norm() * s * s)) * Ixk;
}

CVec3 rotate_about(const Vec3& w, double angle, const CVec3& f) {
  const double c = std::cos(angle), s = std::sin(angle);
  const CVec3 wc = w.cast<Complex>();
  const CVec3 wxf = cross(wc, f);
  const Complex wf = wc.dot(f);  // conjugates wc, which is real
  return c * f + s * wxf + (1.0 - c) * wf * wc;
}

}  // namespace helika
