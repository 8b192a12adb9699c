#include "helika/states.hpp"

#include <cmath>
#include <string>

#include "helika/frames.hpp"

namespace helika {

namespace {

constexpr double kClipTolerance = 1e-8;
constexpr double kTransverseTolerance = 1e-8;

// Composite Gauss-Legendre integral of g(k)^2 k^2 over [a, b] for the unnormalized shell.
double shell_moment(double k0, double width, double a, double b) {
  if (!(b > a)) return 0.0;
  static const auto rule = [] {
    std::pair<std::vector<double>, std::vector<double>> r;
    gauss_legendre(24, r.first, r.second);
    return r;
  }();
  const int panels = 64;
  const double step = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * step, half = 0.5 * step, mid = lo + half;
    for (std::size_t q = 0; q < rule.first.size(); ++q) {
      const double k = mid + half * rule.first[q];
      const double d = (k - k0) / width;
      sum += half * rule.second[q] * std::exp(-0.5 * d * d) * k * k;
    }
  }
  return sum;
}

double shell_total(double k0, double width) {
  return shell_moment(k0, width, std::max(0.0, k0 - 40.0 * width), k0 + 40.0 * width);
}

Vec3 checked_axis(const Vec3& I) {
  const double n = I.norm();
  if (!(n > 0.0) || !std::isfinite(n))
    throw Error(ErrorCode::InvalidArgument, "Berry vector must be nonzero");
  return I / n;
}

void check_sigma(int sigma) {
  if (sigma != 1 && sigma != -1) throw Error(ErrorCode::InvalidArgument, "sigma must be +1 or -1");
}

void check_off_line(const Vec3& I, const Vec3& k0) {
  if (I.cross(k0).norm() < kSingularThreshold * k0.norm())
    throw Error(ErrorCode::SingularLine, "packet center lies on the singular line of I");
}

// Fraction of a separable Gaussian |f|^2 (std `widths`) inside a box.
double box_gaussian_mass(const Vec3& k0, const Vec3& widths, const BoxSpec& box) {
  double frac = 1.0;
  for (int a = 0; a < 3; ++a) {
    const double lo = box.center[a] - box.half_widths[a], hi = box.center[a] + box.half_widths[a];
    const double s = std::sqrt(2.0) * widths[a];
    frac *= 0.5 * (std::erf((hi - k0[a]) / s) - std::erf((lo - k0[a]) / s));
  }
  return frac;
}

TwoCompState gaussian_state(const GridPtr& grid, const Vec3& k0, const Vec3& widths, const C2& amps,
                            const Vec3& I) {
  const auto& g = *grid;
  std::vector<C2> vals(g.size());
  double masked_mass = 0.0, unmasked_mass = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3 d = g.node(i) - k0;
    double e = 0.0;
    for (int a = 0; a < 3; ++a) e += d[a] * d[a] / (4.0 * widths[a] * widths[a]);
    const double env = std::exp(-e);
    vals[i] = amps * env;
    (g.masked(i) ? masked_mass : unmasked_mass) += g.weight(i) * env * env;
  }
  // Analytic mass of exp(-sum d^2 / (2 w^2)).
  const double total = std::pow(2.0 * kPi, 1.5) * widths.prod();
  double lost;
  if (g.kind() == GridKind::UniformBox)
    lost = (1.0 - box_gaussian_mass(k0, widths, g.box())) + masked_mass / total;
  else
    lost = 1.0 - unmasked_mass / total;
  if (lost > kClipTolerance)
    throw Error(ErrorCode::EnvelopeClipped,
                "envelope mass outside the usable grid is " + std::to_string(lost));
  TwoCompState s{Field<C2>(grid, std::move(vals)), I, 0.0};
  const double n = std::sqrt(norm_squared(s));
  for (auto& v : s.ftilde.values) v /= n;
  return s;
}

TwoCompState spherical_state(const GridPtr& grid, const SphericalMode& m, const Vec3& I) {
  const auto& g = *grid;
  if (g.kind() != GridKind::SphericalProduct)
    throw Error(ErrorCode::GridMismatch, "spherical modes need a spherical product grid");
  const ShellSpec& sh = g.shell();
  const double radial_lost = 1.0 - radial_shell_mass(m.k0, m.shell_width, sh.k_min, sh.k_max);

  const C2 a = alpha(m.sigma);
  const double norm = 1.0 / std::sqrt(shell_total(m.k0, m.shell_width));
  std::vector<C2> vals(g.size());
  double masked_angular = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3& k = g.node(i);
    const double r = k.norm();
    const double d = (r - m.k0) / m.shell_width;
    const Complex y = spherical_harmonic(m.lambda, m.mu, k / r);
    const Complex v = y * norm * std::exp(-0.25 * d * d);
    vals[i] = a * v;
    if (g.masked(i)) masked_angular += g.weight(i) * std::norm(v);
  }
  const double lost = radial_lost + masked_angular;
  if (lost > kClipTolerance)
    throw Error(ErrorCode::EnvelopeClipped,
                "shell mass outside the usable grid is " + std::to_string(lost));
  TwoCompState s{Field<C2>(grid, std::move(vals)), I, 0.0};
  const double n = std::sqrt(norm_squared(s));
  for (auto& v : s.ftilde.values) v /= n;
  return s;
}

void check_same_grid(const KGrid& a, const KGrid& b) {
  if (!a.same_as(b)) throw Error(ErrorCode::GridMismatch, "states live on different grids");
}

}  // namespace

void validate(const ModeSpec& spec) {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianPacket>) {
          if (!(m.amps.norm() > 0.0)) throw Error(ErrorCode::InvalidArgument, "amps must be nonzero");
          if (!(m.widths.minCoeff() > 0.0))
            throw Error(ErrorCode::InvalidArgument, "packet widths must be positive");
          if (!(m.k0.norm() > 0.0)) throw Error(ErrorCode::InvalidArgument, "k0 must be nonzero");
        } else if constexpr (std::is_same_v<T, SphericalMode>) {
          check_sigma(m.sigma);
          if (m.lambda < 0) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
          if (std::abs(m.mu) > m.lambda)
            throw Error(ErrorCode::InvalidArgument, "|mu| must not exceed lambda");
          if (!(m.k0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "k0 must be positive");
          if (!(m.shell_width > 0.0))
            throw Error(ErrorCode::InvalidArgument, "shell_width must be positive");
        } else {
          check_sigma(m.sigma);
          if (!(m.k0.norm() > 0.0)) throw Error(ErrorCode::InvalidArgument, "k0 must be nonzero");
          if (!(m.effective_widths().minCoeff() > 0.0))
            throw Error(ErrorCode::InvalidArgument, "proxy widths must be positive");
        }
      },
      spec);
}

TwoCompState build_state(const GridPtr& grid, const ModeSpec& spec, const Vec3& I_in) {
  validate(spec);
  const Vec3 I = checked_axis(I_in);
  if (const auto* p = std::get_if<GaussianPacket>(&spec)) {
    check_off_line(I, p->k0);
    return gaussian_state(grid, p->k0, p->widths, p->amps, I);
  }
  if (const auto* p = std::get_if<PlaneWaveProxy>(&spec)) {
    check_off_line(I, p->k0);
    return gaussian_state(grid, p->k0, p->effective_widths(), alpha(p->sigma), I);
  }
  return spherical_state(grid, std::get<SphericalMode>(spec), I);
}

VectorState to_lab(const TwoCompState& s) {
  const auto& g = s.grid();
  std::vector<CVec3> out(g.size(), CVec3::Zero());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3& k = g.node(i);
    if (s.I.cross(k).norm() < kSingularThreshold * k.norm()) {
      if (s.ftilde.usable(i))
        throw Error(ErrorCode::SingularLine, "unmasked node on the singular line of I");
      continue;
    }
    out[i] = quasi_unitary(polarization_frame(s.I, k)).lift(s.ftilde.values[i]);
  }
  return VectorState{Field<CVec3>(s.ftilde.grid, std::move(out), s.ftilde.valid), s.t};
}

TwoCompState to_intrinsic(const VectorState& s, const Vec3& I_in) {
  const Vec3 I = checked_axis(I_in);
  const double res = transversality_residual(s);
  if (res > kTransverseTolerance)
    throw Error(ErrorCode::NotTransverse, "transversality residual " + std::to_string(res));
  const auto& g = s.grid();
  std::vector<C2> out(g.size(), C2::Zero());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3& k = g.node(i);
    if (I.cross(k).norm() < kSingularThreshold * k.norm()) {
      if (s.f.usable(i))
        throw Error(ErrorCode::SingularLine, "unmasked node on the singular line of I");
      continue;
    }
    out[i] = quasi_unitary(polarization_frame(I, k)).project(s.f.values[i]);
  }
  return TwoCompState{Field<C2>(s.f.grid, std::move(out), s.f.valid), I, s.t};
}

TwoCompState evolve(const TwoCompState& s, double dt) {
  TwoCompState r = s;
  const double c = s.grid().config().c;
  for (std::size_t i = 0; i < r.ftilde.size(); ++i)
    r.ftilde.values[i] *= std::polar(1.0, -c * s.grid().node(i).norm() * dt);
  r.t += dt;
  return r;
}

VectorState evolve(const VectorState& s, double dt) {
  VectorState r = s;
  const double c = s.grid().config().c;
  for (std::size_t i = 0; i < r.f.size(); ++i)
    r.f.values[i] *= std::polar(1.0, -c * s.grid().node(i).norm() * dt);
  r.t += dt;
  return r;
}

Complex inner(const TwoCompState& a, const TwoCompState& b) {
  check_same_grid(a.grid(), b.grid());
  if ((a.I - b.I).norm() > 1e-14)
    throw Error(ErrorCode::InvalidArgument, "states carry different Berry vectors");
  Field<Complex> prod(a.ftilde.grid, std::vector<Complex>(a.ftilde.size()),
                      combine_valid(a.ftilde.valid, b.ftilde.valid));
  for (std::size_t i = 0; i < prod.size(); ++i)
    prod.values[i] = a.ftilde.values[i].dot(b.ftilde.values[i]);
  return quadrature(prod);
}

Complex inner(const VectorState& a, const VectorState& b) {
  check_same_grid(a.grid(), b.grid());
  Field<Complex> prod(a.f.grid, std::vector<Complex>(a.f.size()), combine_valid(a.f.valid, b.f.valid));
  for (std::size_t i = 0; i < prod.size(); ++i) prod.values[i] = a.f.values[i].dot(b.f.values[i]);
  return quadrature(prod);
}

double norm_squared(const TwoCompState& s) {
  Field<double> d(s.ftilde.grid, std::vector<double>(s.ftilde.size()), s.ftilde.valid);
  for (std::size_t i = 0; i < d.size(); ++i) d.values[i] = s.ftilde.values[i].squaredNorm();
  return quadrature(d);
}

double norm_squared(const VectorState& s) {
  Field<double> d(s.f.grid, std::vector<double>(s.f.size()), s.f.valid);
  for (std::size_t i = 0; i < d.size(); ++i) d.values[i] = s.f.values[i].squaredNorm();
  return quadrature(d);
}

double transversality_residual(const VectorState& s) {
  double worst = 0.0;
  for (std::size_t i = 0; i < s.f.size(); ++i) {
    if (!s.f.usable(i)) continue;
    const CVec3& f = s.f.values[i];
    const double fn = f.norm();
    if (fn == 0.0) continue;
    const Vec3& k = s.grid().node(i);
    const Complex fk = f.dot(k.cast<Complex>());
    worst = std::max(worst, std::abs(fk) / (fn * k.norm()));
  }
  return worst;
}

Complex spherical_harmonic(int l, int m, const Vec3& w) {
  const int am = std::abs(m);
  if (l < 0 || am > l) throw Error(ErrorCode::InvalidArgument, "need |m| <= l");
  const double theta = std::acos(std::clamp(w.z() / w.norm(), -1.0, 1.0));
  const double phi = std::atan2(w.y(), w.x());
  const double p = std::sph_legendre(static_cast<unsigned>(l), static_cast<unsigned>(am), theta);
  if (m >= 0) return p * std::polar(1.0, m * phi);
  const double sign = (am % 2 == 0) ? 1.0 : -1.0;
  return sign * p * std::polar(1.0, -am * phi);
}

double radial_shell(double k, double k0, double width) {
  const double d = (k - k0) / width;
  return std::exp(-0.25 * d * d) / std::sqrt(shell_total(k0, width));
}

double radial_shell_mass(double k0, double width, double k_min, double k_max) {
  const double lo = std::max(0.0, k0 - 40.0 * width), hi = k0 + 40.0 * width;
  const double inside = shell_moment(k0, width, std::max(lo, k_min), std::min(hi, k_max));
  return inside / shell_total(k0, width);
}

}  // namespace helika
