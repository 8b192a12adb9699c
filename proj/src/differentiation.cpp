#include <array>
#include <cmath>
#include <vector>

#include "helika/kgrid.hpp"

namespace helika {

namespace {

struct Stencil {
  int offset;  // index of the first stencil point relative to the target
  std::array<double, 5> coef;
  int width;
};

// First-derivative stencils (coefficients multiply f / h).
Stencil fd_stencil(int order, int j, int n) {
  if (order == 2) {
    if (j == 0) return {0, {-1.5, 2.0, -0.5, 0, 0}, 3};
    if (j == n - 1) return {-2, {0.5, -2.0, 1.5, 0, 0}, 3};
    return {-1, {-0.5, 0.0, 0.5, 0, 0}, 3};
  }
  if (j == 0) return {0, {-25.0 / 12, 4.0, -3.0, 4.0 / 3, -0.25}, 5};
  if (j == 1) return {-1, {-0.25, -5.0 / 6, 1.5, -0.5, 1.0 / 12}, 5};
  if (j == n - 2) return {-3, {-1.0 / 12, 0.5, -1.5, 5.0 / 6, 0.25}, 5};
  if (j == n - 1) return {-4, {0.25, -4.0 / 3, 3.0, -4.0, 25.0 / 12}, 5};
  return {-2, {1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12}, 5};
}

Field<CVec3> box_gradient(const Field<Complex>& f) {
  const KGrid& g = *f.grid;
  const int order = g.config().fd_order;
  const auto& shape = g.shape();
  for (int a = 0; a < 3; ++a)
    if (shape[a] < order + 1)
      throw Error(ErrorCode::GridTooCoarse, "fewer points than the stencil width");

  const std::size_t n = g.size();
  std::vector<CVec3> out(n, CVec3::Zero());
  std::vector<std::uint8_t> ok(n, 1);
  const std::array<std::size_t, 3> stride{static_cast<std::size_t>(shape[1]) * shape[2],
                                          static_cast<std::size_t>(shape[2]), 1};
  for (std::size_t idx = 0; idx < n; ++idx) {
    const std::array<int, 3> pos{static_cast<int>(idx / stride[0]),
                                 static_cast<int>((idx / stride[1]) % shape[1]),
                                 static_cast<int>(idx % shape[2])};
    if (!f.usable(idx)) {
      ok[idx] = 0;
      continue;
    }
    for (int a = 0; a < 3; ++a) {
      const Stencil st = fd_stencil(order, pos[a], shape[a]);
      Complex acc = 0.0;
      for (int s = 0; s < st.width; ++s) {
        const std::size_t src = idx + static_cast<std::ptrdiff_t>(st.offset + s) *
                                          static_cast<std::ptrdiff_t>(stride[a]);
        if (!f.usable(src)) ok[idx] = 0;
        acc += st.coef[s] * f.values[src];
      }
      out[idx][a] = acc / g.spacing()[a];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!ok[i]) out[i].setZero();
  return Field<CVec3>(f.grid, std::move(out), std::move(ok));
}

// Spherical product grids: spectral azimuth, Gauss-Legendre matrices in r and cos(theta).
// Each azimuthal Fourier mode m of a smooth function behaves like sin^(m mod 2)(theta)
// times a polynomial in cos(theta); odd modes are divided by sin(theta) before the
// polynomial derivative and the factor is restored analytically.
Field<CVec3> sphere_gradient(const Field<Complex>& f) {
  const KGrid& g = *f.grid;
  const int nr = g.shape()[0], np = g.shape()[1], na = g.shape()[2];
  const std::size_t n = g.size();
  const auto& ct = g.cos_theta();
  const auto& Dr = g.radial_diff();
  const auto& Dx = g.polar_diff();

  std::vector<int> freq(na);
  for (int k = 0; k < na; ++k) freq[k] = (2 * k < na) ? k : k - na;
  // Forward and inverse azimuthal DFT tables.
  Eigen::MatrixXcd fwd(na, na), inv(na, na);
  for (int k = 0; k < na; ++k)
    for (int c = 0; c < na; ++c) {
      const double ang = freq[k] * g.azimuths()[c];
      fwd(k, c) = std::polar(1.0 / na, -ang);
      inv(c, k) = std::polar(1.0, ang);
    }

  std::vector<Complex> d_r(n), d_th(n), d_ph(n);
  Eigen::VectorXcd ring(na), spec(na), tmp(na);
  // Azimuthal spectra for every (r, theta) ring.
  std::vector<Eigen::VectorXcd> spectra(static_cast<std::size_t>(nr) * np);
  for (int a = 0; a < nr; ++a)
    for (int b = 0; b < np; ++b) {
      for (int c = 0; c < na; ++c) ring[c] = f.values[g.index(a, b, c)];
      spec = fwd * ring;
      spectra[static_cast<std::size_t>(a) * np + b] = spec;
      for (int k = 0; k < na; ++k)
        tmp[k] = (2 * std::abs(freq[k]) == na) ? Complex(0.0) : kI * double(freq[k]) * spec[k];
      ring = inv * tmp;
      for (int c = 0; c < na; ++c) d_ph[g.index(a, b, c)] = ring[c];
    }

  // Polar derivative, mode by mode.
  std::vector<double> st(np);
  for (int b = 0; b < np; ++b) st[b] = std::sqrt(1.0 - ct[b] * ct[b]);
  Eigen::VectorXcd col(np), dcol(np);
  std::vector<Eigen::VectorXcd> dspec(static_cast<std::size_t>(nr) * np, Eigen::VectorXcd(na));
  for (int a = 0; a < nr; ++a)
    for (int k = 0; k < na; ++k) {
      const bool odd = (std::abs(freq[k]) % 2) == 1;
      for (int b = 0; b < np; ++b) {
        const Complex v = spectra[static_cast<std::size_t>(a) * np + b][k];
        col[b] = odd ? v / st[b] : v;
      }
      dcol = Dx * col;
      for (int b = 0; b < np; ++b) {
        const Complex d = odd ? ct[b] * col[b] - st[b] * st[b] * dcol[b] : -st[b] * dcol[b];
        dspec[static_cast<std::size_t>(a) * np + b][k] = d;
      }
    }
  for (int a = 0; a < nr; ++a)
    for (int b = 0; b < np; ++b) {
      ring = inv * dspec[static_cast<std::size_t>(a) * np + b];
      for (int c = 0; c < na; ++c) d_th[g.index(a, b, c)] = ring[c];
    }

  // Radial derivative.
  Eigen::VectorXcd line(nr), dline(nr);
  for (int b = 0; b < np; ++b)
    for (int c = 0; c < na; ++c) {
      for (int a = 0; a < nr; ++a) line[a] = f.values[g.index(a, b, c)];
      dline = Dr * line;
      for (int a = 0; a < nr; ++a) d_r[g.index(a, b, c)] = dline[a];
    }

  std::vector<CVec3> out(n);
  std::vector<std::uint8_t> ok(n, 1);
  for (int a = 0; a < nr; ++a) {
    const double r = g.radii()[a];
    for (int b = 0; b < np; ++b)
      for (int c = 0; c < na; ++c) {
        const std::size_t i = g.index(a, b, c);
        const double ph = g.azimuths()[c];
        const double cp = std::cos(ph), sp = std::sin(ph);
        const Vec3 er(st[b] * cp, st[b] * sp, ct[b]);
        const Vec3 eth(ct[b] * cp, ct[b] * sp, -st[b]);
        const Vec3 eph(-sp, cp, 0.0);
        out[i] = er.cast<Complex>() * d_r[i] + eth.cast<Complex>() * (d_th[i] / r) +
                 eph.cast<Complex>() * (d_ph[i] / (r * st[b]));
        if (!f.usable(i)) {
          ok[i] = 0;
          out[i].setZero();
        }
      }
  }
  return Field<CVec3>(f.grid, std::move(out), std::move(ok));
}

}  // namespace

Field<CVec3> gradient(const Field<Complex>& field) {
  if (field.grid->kind() == GridKind::UniformBox) return box_gradient(field);
  return sphere_gradient(field);
}

}  // namespace helika
