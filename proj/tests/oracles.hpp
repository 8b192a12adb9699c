#pragma once

// Closed forms evaluated by hand, independent of the library's implementations.

#include <array>
#include <cmath>
#include <complex>

namespace oracle {

using V = std::array<double, 3>;
using cd = std::complex<double>;

constexpr double pi = 3.14159265358979323846;

inline double dot(const V& a, const V& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline V cross(const V& a, const V& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const V& a) { return std::sqrt(dot(a, a)); }
inline V scale(const V& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }

struct Triad {
  V u, v, w;
};

// v = I x k / |I x k|, w = k / |k|, u = v x w.
inline Triad frame(const V& I, const V& k) {
  Triad t;
  const V ixk = cross(I, k);
  t.v = scale(ixk, 1.0 / norm(ixk));
  t.w = scale(k, 1.0 / norm(k));
  t.u = cross(t.v, t.w);
  return t;
}

// A_I(k) = (I.k) / (k |I x k|) v_I.
inline V berry_potential(const V& I, const V& k) {
  const Triad t = frame(I, k);
  return scale(t.v, dot(I, k) / (norm(k) * norm(cross(I, k))));
}

// Monopole curvature -w / k^2 = -k / |k|^3.
inline V curvature(const V& k) { return scale(k, -1.0 / std::pow(norm(k), 3)); }

// Angle phi with u' = u cos(phi) + v sin(phi).
inline double rotation_angle(const V& I, const V& Ip, const V& k) {
  const Triad a = frame(I, k), b = frame(Ip, k);
  return std::atan2(dot(b.u, a.v), dot(b.u, a.u));
}

// Plane-wave barycenter sigma (I.k0) / (k0 |I x k0|^2) (I x k0).
inline V barycenter(const V& I, const V& k0, int sigma) {
  const V ixk = cross(I, k0);
  return scale(ixk, sigma * dot(I, k0) / (norm(k0) * dot(ixk, ixk)));
}

// Y_lm for l <= 2 with the Condon-Shortley phase, written out term by term.
inline cd ylm(int l, int m, const V& k) {
  const double r = norm(k);
  const double x = k[0] / r, y = k[1] / r, z = k[2] / r;
  const cd xp(x, y), xm(x, -y);
  if (l == 0) return 0.5 / std::sqrt(pi);
  if (l == 1) {
    if (m == 0) return std::sqrt(3.0 / (4.0 * pi)) * z;
    if (m == 1) return -std::sqrt(3.0 / (8.0 * pi)) * xp;
    if (m == -1) return std::sqrt(3.0 / (8.0 * pi)) * xm;
  }
  if (l == 2) {
    if (m == 0) return std::sqrt(5.0 / (16.0 * pi)) * (3.0 * z * z - 1.0);
    if (m == 1) return -std::sqrt(15.0 / (8.0 * pi)) * z * xp;
    if (m == -1) return std::sqrt(15.0 / (8.0 * pi)) * z * xm;
    if (m == 2) return std::sqrt(15.0 / (32.0 * pi)) * xp * xp;
    if (m == -2) return std::sqrt(15.0 / (32.0 * pi)) * xm * xm;
  }
  return 0.0;
}

// Normalized 3D Gaussian density with per-axis standard deviation w.
inline double gaussian_density(const V& k, const V& k0, const V& w) {
  double p = 1.0;
  for (int a = 0; a < 3; ++a) {
    const double d = (k[a] - k0[a]) / w[a];
    p *= std::exp(-0.5 * d * d) / (std::sqrt(2.0 * pi) * w[a]);
  }
  return p;
}

}  // namespace oracle
