#include "helika/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "helika/frames.hpp"
#include "helika/operators.hpp"

namespace helika {

namespace {

constexpr double kEigenTolerance = 1e-8;
constexpr double kAmplitudeFloor = 1e-6;
constexpr double kPhaseTolerance = 1e-8;
// A and grad phi fall off like 1/rho, rho the distance from the nearer singular line, so the
// stencil error is about (h/rho)^p / rho. Measured prefactors on the reference boxes lie in [0.9, 4.1].
constexpr double kShiftConstant = 10.0;

void require_cover(const KGrid& g, const Vec3& I, const Vec3& Ip) {
  if (!g.covers(I) || !g.covers(Ip))
    throw Error(ErrorCode::MaskInsufficient, "grid mask must exclude the singular lines of I and I'");
}

bool on_line(const Vec3& I, const Vec3& k) {
  return I.cross(k).norm() < kSingularThreshold * k.norm();
}

}  // namespace

double wrap_angle(double x) {
  double r = std::remainder(x, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

GaugeField gauge_field(const Vec3& I_in, const Vec3& Ip_in, const GridPtr& grid) {
  const Vec3 I = I_in.normalized(), Ip = Ip_in.normalized();
  require_cover(*grid, I, Ip);
  const auto& g = *grid;
  std::vector<double> phi(g.size(), 0.0);
  std::vector<std::uint8_t> ok(g.size(), 1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3& k = g.node(i);
    if (on_line(I, k) || on_line(Ip, k)) {
      ok[i] = 0;
      continue;
    }
    phi[i] = frame_rotation_angle(I, Ip, k);
  }
  return {Field<double>(grid, std::move(phi), std::move(ok)), I, Ip};
}

Field<Vec3> phase_gradient(const GaugeField& gf) {
  const auto& p = gf.phi;
  Field<Complex> z(p.grid, std::vector<Complex>(p.size()), p.valid);
  for (std::size_t i = 0; i < p.size(); ++i) z.values[i] = std::polar(1.0, p.values[i]);
  const auto dz = gradient(z);
  std::vector<Vec3> out(p.size(), Vec3::Zero());
  for (std::size_t i = 0; i < p.size(); ++i)
    if (dz.usable(i)) out[i] = (std::conj(z.values[i]) * dz.values[i]).imag();
  return Field<Vec3>(p.grid, std::move(out), dz.valid);
}

TwoCompState first_class(const TwoCompState& s, const Vec3& Ip_in) {
  const Vec3 Ip = Ip_in.normalized();
  const auto& g = s.grid();
  require_cover(g, s.I, Ip);
  TwoCompState r = s;
  r.I = Ip;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3& k = g.node(i);
    if (on_line(s.I, k) || on_line(Ip, k)) continue;
    const double phi = frame_rotation_angle(s.I, Ip, k);
    const double c = std::cos(phi), sn = std::sin(phi);
    const C2& x = s.ftilde.values[i];
    // exp(i sigma phi) = [[cos, sin], [-sin, cos]]
    r.ftilde.values[i] = C2(c * x[0] + sn * x[1], -sn * x[0] + c * x[1]);
  }
  return r;
}

VectorState second_class(const VectorState& s, const Vec3& I_in, const Vec3& Ip_in) {
  const Vec3 I = I_in.normalized(), Ip = Ip_in.normalized();
  const auto& g = s.grid();
  require_cover(g, I, Ip);
  const double res = transversality_residual(s);
  if (res > 1e-8) throw Error(ErrorCode::NotTransverse, "transversality residual " + std::to_string(res));
  VectorState r = s;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3& k = g.node(i);
    if (on_line(I, k) || on_line(Ip, k)) continue;
    r.f.values[i] = rotate_about(k / k.norm(), frame_rotation_angle(I, Ip, k), s.f.values[i]);
  }
  return r;
}

ObservableReport gauge_shift_residual(const Vec3& I, const Vec3& Ip, const GridPtr& grid) {
  const GaugeField gf = gauge_field(I, Ip, grid);
  const auto A = berry_potential(gf.I, grid);
  const auto Ap = berry_potential(gf.I_prime, grid);
  const auto dphi = phase_gradient(gf);
  const auto interior = interior_nodes(*grid);
  double worst = 0.0;
  double rho = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid->size(); ++i) {
    if (!interior[i] || !dphi.usable(i) || !A.A.usable(i) || !Ap.A.usable(i)) continue;
    worst = std::max(worst, (Ap.A.values[i] - A.A.values[i] - dphi.values[i]).norm());
    const Vec3 k = grid->node(i);
    rho = std::min({rho, k.cross(gf.I).norm(), k.cross(gf.I_prime).norm()});
  }
  double tol = fd_tolerance(*grid);
  if (grid->kind() == GridKind::UniformBox && std::isfinite(rho))
    tol = std::max(10.0 * grid->config().tol_fd,
                   kShiftConstant * std::pow(grid->max_spacing() / rho, grid->config().fd_order) / rho);
  return ObservableReport::residual("gauge_shift", worst, tol);
}

BerryPhase berry_phase_extract(const VectorState& f, const VectorState& fp, int sigma,
                               const GaugeField& gf) {
  if (sigma != 1 && sigma != -1) throw Error(ErrorCode::InvalidArgument, "sigma must be +1 or -1");
  if (!f.grid().same_as(fp.grid()) || !f.grid().same_as(*gf.phi.grid))
    throw Error(ErrorCode::GridMismatch, "states and gauge field must share a grid");
  for (const VectorState* s : {&f, &fp}) {
    const double h = expect_lab(LabOpId::Helicity, *s, gf.I)[0].real() / norm_squared(*s);
    if (std::abs(h - sigma) > kEigenTolerance)
      throw Error(ErrorCode::NotEigenstate,
                  "helicity " + std::to_string(h) + " differs from sigma = " + std::to_string(sigma));
  }
  double fmax = 0.0;
  for (std::size_t i = 0; i < f.f.size(); ++i)
    if (f.f.usable(i)) fmax = std::max(fmax, f.f.values[i].norm());
  const double floor = kAmplitudeFloor * fmax;

  std::vector<double> phase(f.f.size(), 0.0);
  std::vector<std::uint8_t> ok(f.f.size(), 0);
  double worst = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < f.f.size(); ++i) {
    if (!f.f.usable(i) || !fp.f.usable(i) || !gf.phi.usable(i)) continue;
    const CVec3& a = f.f.values[i];
    if (!(a.norm() > floor) || floor == 0.0) continue;
    int c;
    a.cwiseAbs().maxCoeff(&c);
    phase[i] = std::arg(fp.f.values[i][c] / a[c]);
    ok[i] = 1;
    ++used;
    worst = std::max(worst, std::abs(wrap_angle(phase[i] + sigma * gf.phi.values[i])));
  }
  if (used == 0) throw Error(ErrorCode::AmplitudeTooSmall, "no node exceeds the amplitude floor");
  BerryPhase out{ObservableReport::residual("berry_phase", worst, kPhaseTolerance),
                 Field<double>(f.f.grid, std::move(phase), std::move(ok))};
  out.report.note = std::to_string(used) + " nodes above floor";
  return out;
}

}  // namespace helika
