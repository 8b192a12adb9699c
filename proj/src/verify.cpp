#include "helika/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "helika/fields.hpp"
#include "helika/frames.hpp"
#include "helika/gauge.hpp"
#include "helika/operators.hpp"

namespace helika {

using nlohmann::json;

namespace {

constexpr double kExact = 1e-12;

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  if (workers == 1) {
    body();
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) pool.emplace_back(body);
  for (auto& t : pool) t.join();
}

Vec3 real3(const ObservableReport& r) {
  return Vec3(r.value.at(0).real(), r.value.at(1).real(), r.value.at(2).real());
}

std::vector<Complex> as_complex(const Vec3& v) { return {v[0], v[1], v[2]}; }

std::vector<Complex> sum(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  std::vector<Complex> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

ObservableReport at_most(std::string name, double value, double limit) {
  return ObservableReport::residual(std::move(name), value, limit);
}

/// Lower bound on an observed convergence order: the shortfall below `order` is the error.
ObservableReport order_at_least(std::string name, double observed, double order, double slack) {
  ObservableReport r;
  r.name = std::move(name);
  r.value = {observed};
  r.reference = {order};
  r.abs_err = std::max(0.0, order - observed);
  r.rel_err = r.abs_err / order;
  r.tolerance = slack;
  r.pass = std::isfinite(observed) && r.abs_err <= slack;
  r.note = "observed order must reach the reference minus the tolerance";
  return r;
}

/// Error-ratio test with the ratio confined to [lo, hi].
ObservableReport ratio_within(std::string name, double ratio, double nominal, double lo, double hi) {
  ObservableReport r;
  r.name = std::move(name);
  r.value = {ratio};
  r.reference = {nominal};
  r.abs_err = std::abs(ratio - nominal);
  r.rel_err = r.abs_err / nominal;
  r.tolerance = std::max(nominal - lo, hi - nominal) / nominal;
  r.pass = ratio >= lo && ratio <= hi;
  r.note = "error ratio under refinement";
  return r;
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

double max_node_diff(const Field<CVec3>& a, const Field<CVec3>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.usable(i) && b.usable(i)) m = std::max(m, (a.values[i] - b.values[i]).norm());
  return m;
}

double max_node_diff(const Field<C2>& a, const Field<C2>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.usable(i) && b.usable(i)) m = std::max(m, (a.values[i] - b.values[i]).norm());
  return m;
}

double max_abs(const Field<CVec3>& f) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.usable(i)) m = std::max(m, f.values[i].norm());
  return m;
}

/// Smallest angle between an unmasked node direction and the line +-axis.
double min_line_angle(const KGrid& g, const Vec3& axis) {
  double m = kPi;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.masked(i)) continue;
    const Vec3 w = g.node(i).normalized();
    m = std::min(m, std::atan2(w.cross(axis).norm(), std::abs(w.dot(axis))));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Family members

struct Member {
  std::string name;
  std::optional<ModeSpec> spec;
  std::optional<GridDescriptor> descriptor;
  Vec3 I_prime = Vec3::UnitX();
  std::shared_ptr<const TwoCompState> state;
  std::string error;
  ErrorCode code = ErrorCode::InvalidArgument;

  const TwoCompState& get() const {
    if (!state) throw Error(code, error.substr(error.find(": ") == std::string::npos ? 0 : error.find(": ") + 2));
    return *state;
  }
};

/// Helicity eigenvalue if the state is a helicity eigenstate, 0 otherwise.
int helicity_of(const TwoCompState& s) {
  const double h = expect(OpId::Helicity, s).value.at(0).real() / norm_squared(s);
  if (std::abs(h - 1.0) < 1e-8) return 1;
  if (std::abs(h + 1.0) < 1e-8) return -1;
  return 0;
}

// ---------------------------------------------------------------------------
// frames

std::vector<ObservableReport> random_frame_checks(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> radius(0.1, 10.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double triad = 0.0, orth = 0.0, unit2 = 0.0, proj = 0.0, herm = 0.0, spectrum = 0.0, trip = 0.0;
  for (int n = 0; n < 10000; ++n) {
    const Vec3 I = random_unit(rng);
    Vec3 k;
    do {
      k = radius(rng) * random_unit(rng);
    } while (I.cross(k).norm() < 1e-3 * k.norm());
    const Frame f = polarization_frame(I, k);
    triad = std::max({triad, (f.u.cross(f.v) - f.w).norm(), (f.v.cross(f.w) - f.u).norm(),
                      (f.w.cross(f.u) - f.v).norm()});
    orth = std::max({orth, std::abs(f.u.dot(f.w)), std::abs(f.v.dot(f.w)),
                     (f.v - I.cross(k).normalized()).norm()});
    const QuasiUnitary q = quasi_unitary(f);
    unit2 = std::max(unit2, (q.m.transpose() * q.m - Eigen::Matrix2d::Identity()).norm());
    const Eigen::Matrix3d P = Eigen::Matrix3d::Identity() - f.w * f.w.transpose();
    proj = std::max(proj, (q.m * q.m.transpose() - P).norm());
    const Mat3c S = helicity_matrix_lab(f.w);
    herm = std::max(herm, (S - S.adjoint()).norm());
    Eigen::SelfAdjointEigenSolver<Mat3c> es(S);
    const Vec3 ev = es.eigenvalues();
    spectrum = std::max(spectrum, (ev - Vec3(-1.0, 0.0, 1.0)).norm());
    const C2 a(Complex(gauss(rng), gauss(rng)), Complex(gauss(rng), gauss(rng)));
    const CVec3 lifted = q.lift(a);
    trip = std::max({trip, (q.project(lifted) - a).norm() / a.norm(),
                     (q.lift(q.project(lifted)) - lifted).norm() / a.norm()});
  }
  return {at_most("triad", triad, kExact),
          at_most("orthogonality", orth, kExact),
          at_most("varpi_T_varpi", unit2, kExact),
          at_most("varpi_varpi_T", proj, kExact),
          at_most("helicity_hermitian", herm, kExact),
          at_most("helicity_spectrum", spectrum, kExact),
          at_most("round_trip", trip, kExact)};
}

std::vector<ObservableReport> rotation_checks(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  double series = 0.0;
  const Mat2c sigma = pauli_sigma();
  for (int n = 0; n < 100; ++n) {
    const double phi = angle(rng);
    Mat2c term = Mat2c::Identity(), sum = Mat2c::Identity();
    for (int m = 1; m < 60; ++m) {
      term = term * (-kI * phi * sigma) / static_cast<double>(m);
      sum += term;
    }
    series = std::max(series, (sum - rotation2(phi).cast<Complex>()).norm());
  }
  double convention = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const Vec3 I = random_unit(rng), Ip = random_unit(rng);
    Vec3 k;
    do {
      k = random_unit(rng);
    } while (I.cross(k).norm() < 1e-3 || Ip.cross(k).norm() < 1e-3);
    const double phi = frame_rotation_angle(I, Ip, k);
    const Mat32 a = quasi_unitary(polarization_frame(I, k)).m;
    const Mat32 b = quasi_unitary(polarization_frame(Ip, k)).m;
    convention = std::max(convention, (b - a * rotation2(phi)).norm());
  }
  return {at_most("exp_sigma_series", series, kExact), at_most("varpi_rotation", convention, kExact)};
}

std::vector<ObservableReport> state_frame_checks(const TwoCompState& s) {
  const Config& c = s.grid().config();
  const VectorState lab = to_lab(s);
  const TwoCompState back = to_intrinsic(lab, s.I);
  const double dt = 0.37;
  const VectorState a = to_lab(evolve(s, dt));
  const VectorState b = evolve(lab, dt);
  std::vector<ObservableReport> out;
  out.push_back(at_most("transversality", transversality_residual(lab), 1e-10));
  out.push_back(ObservableReport::compare("norm_lab", {norm_squared(lab)}, {norm_squared(s)}, kExact));
  out.push_back(ObservableReport::compare("norm", {norm_squared(s)}, {1.0}, c.tol_quad));
  out.push_back(at_most("intrinsic_round_trip", max_node_diff(back.ftilde, s.ftilde), kExact));
  out.push_back(at_most("lab_round_trip", max_node_diff(to_lab(back).f, lab.f), kExact));
  out.push_back(at_most("evolve_commutes", max_node_diff(a.f, b.f), kExact));
  return out;
}

// ---------------------------------------------------------------------------
// algebra

std::vector<ObservableReport> commutator_table(const TwoCompState& s) {
  std::vector<ObservableReport> out;
  for (PairId p : {PairId::CanonicalPair, PairId::CanonicalPosition, PairId::PositionLab, PairId::Oam,
                   PairId::OamSpin, PairId::J, PairId::SpinLab, PairId::Lambda, PairId::M})
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out.push_back(commutator_expect(p, s, i, j));
  return out;
}

std::vector<ObservableReport> observable_checks(const TwoCompState& s) {
  const Config& c = s.grid().config();
  const double tq = 10.0 * c.tol_quad;
  std::vector<ObservableReport> out;
  const ObservableReport lam = expect(OpId::OamLambda, s);
  const ObservableReport m = expect(OpId::OamM, s);
  const ObservableReport l = expect(OpId::OamTotal, s);
  const ObservableReport spin = expect(OpId::Spin, s);
  const ObservableReport j = expect(OpId::JTotal, s);
  for (const auto* r : {&lam, &m, &l, &spin, &j}) out.push_back(*r);

  out.push_back(ObservableReport::compare("oam_additivity", l.value, sum(lam.value, m.value), kExact));
  out.push_back(ObservableReport::compare("j_along_I", {real3(j).dot(s.I)}, {real3(lam).dot(s.I)}, tq));

  const VectorState lab = to_lab(s);
  out.push_back(ObservableReport::compare("spin_alignment", as_complex(real3(spin)),
                                          expect_lab(LabOpId::Spin, lab, s.I), 1e-10));
  out.push_back(ObservableReport::compare("spin_squared", {spin_squared(lab)}, {norm_squared(lab)}, 1e-10));
  out.push_back(at_most("pryce", pryce_residual(lab), 1e-20));
  out.push_back(ObservableReport::compare("helicity_gradient", as_complex(helicity_gradient_expect(lab)),
                                          as_complex(Vec3::Zero()), 1e-10));
  out.push_back(at_most("total_j_identity", total_j_identity_residual(s.grid(), s.I), 1e-10));

  // lambda differentiates the evolution phase exp(-i c |k| dt), whose gradient is c dt w.
  const double dt = 0.37;
  const TwoCompState later = evolve(s, dt);
  const double kmean = real3(expect(OpId::Momentum, s)).norm() / c.hbar;
  out.push_back(ObservableReport::compare("m_constant", expect(OpId::OamM, later).value, m.value, c.tol_quad));
  out.push_back(ObservableReport::compare("lambda_constant", expect(OpId::OamLambda, later).value, lam.value,
                                          derivative_tolerance(s, c.hbar * kmean * c.c * dt)));
  out.push_back(ObservableReport::compare("barycenter_constant", as_complex(barycenter(later).b),
                                          as_complex(barycenter(s).b), c.tol_quad));

  const int sigma = helicity_of(s);
  if (sigma != 0) {
    double eig = 0.0;
    const auto h = apply(OpId::Helicity, s).at(0);
    for (std::size_t n = 0; n < s.ftilde.size(); ++n)
      if (s.ftilde.usable(n))
        eig = std::max(eig, (h.ftilde.values[n] - static_cast<double>(sigma) * s.ftilde.values[n]).norm());
    out.push_back(at_most("helicity_eigenstate", eig, kExact));
  }
  return out;
}

std::vector<ObservableReport> spherical_checks(const TwoCompState& s, const SphericalMode& m) {
  const double hbar = s.grid().config().hbar;
  const double l2 = m.lambda * (m.lambda + 1.0) * hbar * hbar;
  const ObservableReport sq = expect_square(OpId::OamLambda, s);
  const ObservableReport lz = expect(OpId::OamLambda, s);
  ObservableReport a = ObservableReport::compare("lambda_squared", {sq.value.at(0).real()}, {l2}, 1e-3);
  ObservableReport b = ObservableReport::compare("lambda_z", {lz.value.at(2).real()}, {m.mu * hbar}, 1e-3);
  if (l2 == 0.0) a.pass = a.abs_err <= 1e-3;
  if (m.mu == 0) b.pass = b.abs_err <= 1e-3 * hbar;
  return {a, b};
}

/// Plane-wave proxy barycenter at widths 4w, 2w, w of the proxy's own width.
std::vector<ObservableReport> barycenter_convergence(const RunConfig& rc, const Member& mem) {
  const auto& p = std::get<PlaneWaveProxy>(*mem.spec);
  const Vec3 I = mem.get().I;
  const Vec3 b0 = barycenter_eigenvalue(I, p.k0, p.sigma);
  std::vector<double> err;
  std::vector<ObservableReport> out;
  for (double f : {4.0, 2.0, 1.0}) {
    PlaneWaveProxy q = p;
    q.widths = f * p.effective_widths();
    GridDescriptor d = auto_grid(q, I, rc.box_points, rc.shell_points, rc.auto_extent);
    const TwoCompState s = build_state(make_grid(d, rc.constants), q, I);
    const Vec3 b = barycenter(s).b;
    err.push_back((b - b0).norm());
    ObservableReport r = ObservableReport::compare("barycenter_w" + format_double(q.widths->maxCoeff()),
                                                   as_complex(b), as_complex(b0), 0.0);
    r.pass = true;
    r.note = "informational";
    out.push_back(r);
  }
  for (std::size_t i = 1; i < err.size(); ++i)
    out.push_back(order_at_least("barycenter_order_" + std::to_string(i), std::log2(err[i - 1] / err[i]), 2.0, 0.5));
  return out;
}

std::vector<ObservableReport> orthogonality_checks(const std::vector<const Member*>& modes, double tol) {
  std::vector<ObservableReport> out;
  for (std::size_t a = 0; a < modes.size(); ++a)
    for (std::size_t b = a + 1; b < modes.size(); ++b) {
      const Complex ip = inner(modes[a]->get(), modes[b]->get());
      out.push_back(at_most("inner(" + modes[a]->name + "," + modes[b]->name + ")", std::abs(ip), tol));
    }
  return out;
}

std::vector<ObservableReport> monopole_flux_checks(const Config& c) {
  const auto g = build_spherical_grid(4.0, 6.0, 8, 16, 32, Vec3::UnitZ(), 0.0, c);
  std::vector<ObservableReport> out;
  for (int a = 0; a < g->shell().n_rad; ++a)
    out.push_back(ObservableReport::compare("flux_r" + std::to_string(a), {monopole_flux(*g, a)}, {-4.0 * kPi}, 1e-6));
  return out;
}

}  // namespace

std::vector<ObservableReport> monopole_convergence(const Config& c) {
  const Vec3 center(3.0, 3.0, 3.0);
  const double hw = 1.0;
  const int p = c.fd_order;
  const double nominal = std::pow(2.0, p);
  std::vector<double> curl_err, shift_err;
  for (int n : {17, 33, 65}) {
    const auto g = build_box_grid(center, Vec3::Constant(hw), {n, n, n}, Vec3::UnitZ(), 0.0, c);
    const auto A = berry_potential(Vec3::UnitZ(), g);
    const auto H = berry_curvature(A);
    const auto Ap = berry_potential(Vec3::UnitX(), g);
    const auto dphi = phase_gradient(gauge_field(Vec3::UnitZ(), Vec3::UnitX(), g));
    double ec = 0.0, es = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
      if ((g->node(i) - center).cwiseAbs().maxCoeff() > 0.5 * hw + 1e-12) continue;
      ec = std::max(ec, (H.values[i] - berry_curvature_closed_form(g->node(i))).norm());
      es = std::max(es, (Ap.A.values[i] - A.A.values[i] - dphi.values[i]).norm());
    }
    curl_err.push_back(ec);
    shift_err.push_back(es);
  }
  std::vector<ObservableReport> out;
  for (std::size_t i = 1; i < 3; ++i) {
    out.push_back(ratio_within("curl_ratio_" + std::to_string(i), curl_err[i - 1] / curl_err[i], nominal,
                               0.7 * nominal, 1.3 * nominal));
    out.push_back(ratio_within("shift_ratio_" + std::to_string(i), shift_err[i - 1] / shift_err[i], nominal,
                               0.7 * nominal, 1.3 * nominal));
  }
  return out;
}

namespace {

// ---------------------------------------------------------------------------
// gauge

std::vector<ObservableReport> gauge_checks(const TwoCompState& s, const Vec3& Ip) {
  const Config& c = s.grid().config();
  const GridPtr grid = s.ftilde.grid;
  const double tq = 10.0 * c.tol_quad;
  const double tfd = fd_tolerance(*grid);
  (void)c;
  std::vector<ObservableReport> out;

  const GaugeField gf = gauge_field(s.I, Ip, grid);
  const Field<Vec3> dphi = phase_gradient(gf);
  double grad_scale = 0.0, mass = 0.0;
  for (std::size_t n = 0; n < grid->size(); ++n) {
    if (!s.ftilde.usable(n) || !dphi.usable(n)) continue;
    const double p = grid->weight(n) * s.ftilde.values[n].squaredNorm();
    grad_scale += p * dphi.values[n].norm();
    mass += p;
  }
  grad_scale /= mass;

  // First class: lab wavefunction and lab position are untouched. Evaluated on the intrinsic
  // side the position picks up the stencil error of differentiating exp(i sigma phi) ftilde.
  const TwoCompState s1 = first_class(s, Ip);
  const VectorState lab = to_lab(s);
  out.push_back(at_most("first_class_lab", max_node_diff(to_lab(s1).f, lab.f), kExact));
  out.push_back(ObservableReport::compare("first_class_position_lab", expect_lab(LabOpId::Position, to_lab(s1), Ip),
                                          expect_lab(LabOpId::Position, lab, s.I), tq));
  out.push_back(ObservableReport::compare("first_class_position", expect(OpId::PositionLab, s1).value,
                                          expect(OpId::PositionLab, s).value, derivative_tolerance(s, grad_scale)));
  // Composition goes through the first third axis whose singular line the grid avoids.
  for (const Vec3& cand : {Vec3(s.I + Ip), Vec3(s.I - Ip), Vec3(s.I.cross(Ip))}) {
    const Vec3 Ipp = cand.normalized();
    if (!grid->covers(Ipp) || min_line_angle(*grid, Ipp) < 0.05) continue;
    out.push_back(at_most("first_class_composition",
                          max_node_diff(first_class(s1, Ipp).ftilde, first_class(s, Ipp).ftilde), kExact));
    break;
  }
  out.push_back(at_most("first_class_identity", max_node_diff(first_class(s, s.I).ftilde, s.ftilde), kExact));

  // Second class: intrinsic wavefunction, intrinsic position and helicity are untouched.
  const VectorState lab2 = second_class(lab, s.I, Ip);
  out.push_back(at_most("second_class_intrinsic", max_node_diff(to_intrinsic(lab2, Ip).ftilde, s.ftilde), kExact));
  out.push_back(ObservableReport::compare("second_class_xi", expect_lab(LabOpId::IntrinsicPosition, lab2, Ip),
                                          expect_lab(LabOpId::IntrinsicPosition, lab, s.I), tfd + tq));
  out.push_back(ObservableReport::compare("second_class_helicity", expect_lab(LabOpId::Helicity, lab2, Ip),
                                          expect_lab(LabOpId::Helicity, lab, s.I), kExact));
  out.push_back(at_most("second_class_identity", max_node_diff(second_class(lab, s.I, s.I).f, lab.f), kExact));

  // <B_I'> after minus <B_I> before equals <grad(phi) Sigma_w> on the original state.
  const auto sig = apply_lab(LabOpId::Helicity, 0, lab.f, s.I);
  std::vector<Complex> shift(3, 0.0);
  for (std::size_t n = 0; n < grid->size(); ++n) {
    if (!lab.f.usable(n) || !(dphi.valid.empty() || dphi.valid[n])) continue;
    const Complex d = grid->weight(n) * lab.f.values[n].dot(sig.values[n]);
    for (int a = 0; a < 3; ++a) shift[a] += dphi.values[n][a] * d;
  }
  const auto b_after = expect_lab(LabOpId::Barycenter, lab2, Ip);
  const auto b_before = expect_lab(LabOpId::Barycenter, lab, s.I);
  std::vector<Complex> delta(3);
  for (int a = 0; a < 3; ++a) delta[a] = b_after[a] - b_before[a];
  out.push_back(ObservableReport::compare("barycenter_shift", delta, shift, tfd + tq));

  const int sigma = helicity_of(s);
  if (sigma != 0) {
    double eig = 0.0;
    const auto h2 = apply_lab(LabOpId::Helicity, 0, lab2.f, Ip);
    for (std::size_t n = 0; n < grid->size(); ++n)
      if (lab2.f.usable(n)) eig = std::max(eig, (h2.values[n] - static_cast<double>(sigma) * lab2.f.values[n]).norm());
    out.push_back(at_most("helicity_eigen_after", eig / max_abs(lab2.f), 1e-10));
    out.push_back(berry_phase_extract(lab, lab2, sigma, gf).report);
  }

  const ObservableReport shift_report = gauge_shift_residual(s.I, Ip, grid);
  out.push_back(shift_report);
  const auto H = berry_curvature(berry_potential(s.I, grid));
  const auto Hp = berry_curvature(berry_potential(Ip, grid));
  const auto interior = interior_nodes(*grid);
  double dH = 0.0;
  for (std::size_t n = 0; n < grid->size(); ++n)
    if (interior[n] && H.usable(n) && Hp.usable(n)) dH = std::max(dH, (H.values[n] - Hp.values[n]).norm());
  out.push_back(at_most("curvature_invariance", dH, 2.0 * shift_report.tolerance));
  return out;
}

std::optional<std::string> gauge_skip_reason(const TwoCompState& s, const Vec3& Ip) {
  const KGrid& g = s.grid();
  if (g.kind() != GridKind::UniformBox) return "gauge shift needs a box grid";
  if (s.I.cross(Ip).norm() < 1e-12) return "I' equals I";
  if (!g.covers(Ip) || min_line_angle(g, Ip) < 0.05) return "grid reaches the singular line of I'";
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// fields

constexpr std::size_t kMaxRealPoints = std::size_t{1} << 21;

std::optional<std::string> fields_skip_reason(const TwoCompState& s) {
  const KGrid& g = s.grid();
  if (g.kind() != GridKind::UniformBox) return "real-space synthesis needs a box k-lattice";
  const auto shape = minimal_real_shape(g);
  const std::size_t n = static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
  if (n > kMaxRealPoints)
    return "matched real grid needs " + std::to_string(n) + " points";
  return std::nullopt;
}

std::vector<ObservableReport> field_checks(const TwoCompState& s) {
  const VectorState lab = to_lab(s);
  const RealGrid rg = matched_real_grid(s.ftilde.grid, minimal_real_shape(s.grid()));
  const MaxwellResiduals m = maxwell_residuals(lab, rg);
  std::vector<ObservableReport> out;
  out.push_back(at_most("div_E", m.div_E, 1e-10));
  out.push_back(at_most("div_H", m.div_H, 1e-10));
  out.push_back(at_most("div_A", m.div_A, 1e-10));
  out.push_back(at_most("curl_H_pair", m.curl_H, m.time_tolerance));
  out.push_back(at_most("curl_E_pair", m.curl_E, m.time_tolerance));
  out.push_back(at_most("E_from_A", m.e_from_a, m.time_tolerance));
  out.push_back(at_most("H_from_A", m.h_from_a, 1e-9));

  const FieldSnapshot snap = reconstruct(lab, rg);
  const double e_real = realspace_energy(snap);
  out.push_back(ObservableReport::compare("energy", {e_real}, {kspace_energy(lab)}, 1e-3));
  out.push_back(ObservableReport::compare("energy_conserved", {realspace_energy(reconstruct(evolve(lab, 0.5), rg))},
                                          {e_real}, 1e-3));
  VectorState twice = lab;
  for (auto& v : twice.f.values) v *= 2.0;
  out.push_back(ObservableReport::compare("energy_scaling", {realspace_energy(reconstruct(twice, rg))},
                                          {4.0 * e_real}, 1e-10));
  out.push_back(ObservableReport::compare("angular_momentum", as_complex(realspace_angular_momentum(snap)),
                                          as_complex(real3(expect(OpId::JTotal, s))), 1e-2));
  return out;
}

std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

}  // namespace

bool VerifySummary::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::vector<std::string> VerifySummary::failing() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (!c.pass) out.push_back(c.id);
  return out;
}

std::vector<CheckResult> run_checks(const std::vector<Check>& checks, int threads) {
  std::vector<CheckResult> results(checks.size());
  parallel_for(checks.size(), threads, [&](std::size_t i) {
    CheckResult& r = results[i];
    r.id = checks[i].id;
    r.suite = checks[i].suite;
    try {
      r.reports = checks[i].run();
      r.pass = !r.reports.empty() &&
               std::all_of(r.reports.begin(), r.reports.end(), [](const ObservableReport& x) { return x.pass; });
    } catch (const Error& e) {
      r.error = e.what();
    } catch (const std::exception& e) {
      r.error = std::string("Internal: ") + e.what();
    }
  });
  return results;
}

int resolve_threads(int cli_value, int config_value) {
  int n = cli_value;
  if (n <= 0) {
    if (const char* env = std::getenv("HELIKA_THREADS")) n = std::atoi(env);
  }
  if (n <= 0) n = config_value;
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, n);
}

VerifySummary verify(const RunConfig& rc) {
  const int threads = resolve_threads(0, rc.threads);
  VerifySummary summary;
  summary.suites = selected_suites(rc.suites);
  auto has = [&](const char* s) {
    return std::find(summary.suites.begin(), summary.suites.end(), s) != summary.suites.end();
  };

  // Members: configured states first, then state files, each built independently.
  std::vector<Member> members;
  for (const auto& e : rc.states) {
    Member m;
    m.name = e.name;
    m.spec = e.mode;
    m.descriptor = grid_for(rc, e);
    m.I_prime = e.I_prime.value_or(rc.I_prime);
    members.push_back(m);
  }
  for (const auto& path : rc.state_files) {
    Member m;
    m.name = "file:" + stem(path);
    m.I_prime = rc.I_prime;
    members.push_back(m);
  }
  parallel_for(members.size(), threads, [&](std::size_t i) {
    Member& m = members[i];
    try {
      if (i < rc.states.size()) {
        m.state = std::make_shared<const TwoCompState>(build_entry(rc, rc.states[i]));
      } else {
        StoredState st = load_state(rc.state_files[i - rc.states.size()]);
        if (st.spec) m.spec = st.spec;
        if (st.intrinsic())
          m.state = std::make_shared<const TwoCompState>(std::get<TwoCompState>(st.state));
        else
          m.state = std::make_shared<const TwoCompState>(to_intrinsic(std::get<VectorState>(st.state), st.I));
      }
    } catch (const Error& e) {
      m.error = e.what();
      m.code = e.code();
    } catch (const std::exception& e) {
      m.error = std::string("Internal: ") + e.what();
    }
  });

  std::vector<Check> checks;
  auto add = [&](std::string suite, std::string id, std::function<std::vector<ObservableReport>()> fn) {
    checks.push_back({suite + "." + id, suite, std::move(fn)});
  };
  const Config cfg = rc.constants;
  const std::uint64_t seed = rc.seed;

  if (has("frames")) {
    add("frames", "random_triads", [seed] { return random_frame_checks(seed); });
    add("frames", "rotation", [seed] { return rotation_checks(seed + 1); });
    for (const auto& m : members) add("frames", m.name, [&m] { return state_frame_checks(m.get()); });
  }
  if (has("algebra")) {
    add("algebra", "monopole_flux", [cfg] { return monopole_flux_checks(cfg); });
    add("algebra", "monopole_convergence", [cfg] { return monopole_convergence(cfg); });
    std::vector<const Member*> modes;
    for (const auto& m : members) {
      add("algebra", m.name + ".commutators", [&m] { return commutator_table(m.get()); });
      add("algebra", m.name + ".observables", [&m] { return observable_checks(m.get()); });
      if (m.spec && std::holds_alternative<SphericalMode>(*m.spec)) {
        const SphericalMode sm = std::get<SphericalMode>(*m.spec);
        add("algebra", m.name + ".spherical", [&m, sm] { return spherical_checks(m.get(), sm); });
        if (m.state) modes.push_back(&m);
      }
      if (m.spec && std::holds_alternative<PlaneWaveProxy>(*m.spec) && m.state &&
          m.state->grid().kind() == GridKind::UniformBox)
        add("algebra", m.name + ".barycenter", [&rc, &m] { return barycenter_convergence(rc, m); });
    }
    // Orthogonality among spherical modes sharing a grid.
    std::vector<std::vector<const Member*>> groups;
    for (const Member* m : modes) {
      auto it = std::find_if(groups.begin(), groups.end(),
                             [&](const auto& g) { return g.front()->get().grid().same_as(m->get().grid()) &&
                                                         g.front()->get().I == m->get().I; });
      if (it == groups.end())
        groups.push_back({m});
      else
        it->push_back(m);
    }
    for (std::size_t g = 0; g < groups.size(); ++g)
      if (groups[g].size() > 1) {
        auto group = groups[g];
        const double tol = cfg.tol_quad;
        add("algebra", "orthogonality" + (groups.size() > 1 ? "_" + std::to_string(g) : std::string()),
            [group, tol] { return orthogonality_checks(group, tol); });
      }
  }
  if (has("gauge")) {
    for (const auto& m : members) {
      if (m.state) {
        if (auto why = gauge_skip_reason(*m.state, m.I_prime)) {
          summary.skipped.push_back({"gauge." + m.name, *why});
          continue;
        }
      }
      add("gauge", m.name, [&m] { return gauge_checks(m.get(), m.I_prime); });
    }
  }
  if (has("fields")) {
    for (const auto& m : members) {
      if (m.state) {
        if (auto why = fields_skip_reason(*m.state)) {
          summary.skipped.push_back({"fields." + m.name, *why});
          continue;
        }
      }
      add("fields", m.name, [&m] { return field_checks(m.get()); });
    }
  }

  summary.checks = run_checks(checks, threads);
  return summary;
}

json to_json(const VerifySummary& s) {
  json j;
  j["suites"] = s.suites;
  j["pass"] = s.pass();
  j["checks"] = json::array();
  std::size_t passed = 0;
  for (const auto& c : s.checks) {
    json x{{"id", c.id}, {"suite", c.suite}, {"pass", c.pass}};
    if (!c.error.empty()) x["error"] = c.error;
    x["reports"] = json::array();
    for (const auto& r : c.reports) x["reports"].push_back(to_json(r));
    j["checks"].push_back(x);
    passed += c.pass ? 1 : 0;
  }
  j["skipped"] = json::array();
  for (const auto& k : s.skipped) j["skipped"].push_back({{"id", k.id}, {"reason", k.reason}});
  j["passed"] = passed;
  j["failed"] = s.checks.size() - passed;
  j["failing"] = s.failing();
  return j;
}

std::string to_csv(const VerifySummary& s) {
  std::ostringstream out;
  out << "check," << csv_header() << "\n";
  for (const auto& c : s.checks) {
    if (!c.error.empty()) {
      std::string e = c.error;
      std::replace(e.begin(), e.end(), ',', ';');
      std::replace(e.begin(), e.end(), '\n', ' ');
      out << c.id << "," << e << ",0,,,,,,,,false\n";
      continue;
    }
    for (const auto& r : c.reports) {
      std::istringstream lines(to_csv_rows(r));
      for (std::string line; std::getline(lines, line);) out << c.id << "," << line << "\n";
    }
  }
  return out.str();
}

}  // namespace helika
