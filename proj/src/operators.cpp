#include "helika/operators.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "helika/frames.hpp"

namespace helika {

namespace {

struct NodeFrame {
  bool ok = false;
  Vec3 u, v, w, A;
  double c = 0.0;  // (I.k) / |I x k|
};

NodeFrame node_frame(const Vec3& I, const Vec3& k) {
  NodeFrame nf;
  const double kn = k.norm();
  const Vec3 ixk = I.cross(k);
  const double s = ixk.norm();
  if (s < kSingularThreshold * kn) return nf;
  nf.ok = true;
  nf.v = ixk / s;
  nf.w = k / kn;
  nf.u = nf.v.cross(nf.w);
  nf.c = I.dot(k) / s;
  nf.A = (nf.c / kn) * nf.v;
  return nf;
}

constexpr int eps(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0;
  return ((j - i + 3) % 3 == 1) ? 1 : -1;
}

bool needs_gradient(OpId op) {
  return op == OpId::CanonicalPosition || op == OpId::PositionLab || op == OpId::OamLambda ||
         op == OpId::OamTotal || op == OpId::JTotal;
}

bool needs_frame(OpId op) {
  return op == OpId::PositionLab || op == OpId::BerryConnection || op == OpId::OamM ||
         op == OpId::OamTotal || op == OpId::JTotal;
}

std::array<Field<CVec3>, 2> gradient2(const Field<C2>& f) {
  std::array<Field<CVec3>, 2> out;
  for (int c = 0; c < 2; ++c) {
    Field<Complex> comp(f.grid, std::vector<Complex>(f.size()), f.valid);
    for (std::size_t i = 0; i < f.size(); ++i) comp.values[i] = f.values[i][c];
    out[c] = gradient(comp);
  }
  return out;
}

std::array<Field<CVec3>, 3> gradient3(const Field<CVec3>& f) {
  std::array<Field<CVec3>, 3> out;
  for (int c = 0; c < 3; ++c) {
    Field<Complex> comp(f.grid, std::vector<Complex>(f.size()), f.valid);
    for (std::size_t i = 0; i < f.size(); ++i) comp.values[i] = f.values[i][c];
    out[c] = gradient(comp);
  }
  return out;
}

void singular(const char* where) {
  throw Error(ErrorCode::SingularLine, std::string(where) + ": unmasked node on the singular line");
}

// f^dagger g integrated over the nodes where both are usable and `extra` holds.
Complex braket(const Field<C2>& f, const Field<C2>& g, const std::vector<std::uint8_t>& extra = {}) {
  Field<Complex> d(f.grid, std::vector<Complex>(f.size()), combine_valid(combine_valid(f.valid, g.valid), extra));
  for (std::size_t i = 0; i < f.size(); ++i) d.values[i] = f.values[i].dot(g.values[i]);
  return quadrature(d);
}

Complex braket(const Field<CVec3>& f, const Field<CVec3>& g, const std::vector<std::uint8_t>& extra = {}) {
  Field<Complex> d(f.grid, std::vector<Complex>(f.size()), combine_valid(combine_valid(f.valid, g.valid), extra));
  for (std::size_t i = 0; i < f.size(); ++i) d.values[i] = f.values[i].dot(g.values[i]);
  return quadrature(d);
}

Field<C2> subtract(const Field<C2>& a, const Field<C2>& b) {
  Field<C2> r(a.grid, std::vector<C2>(a.size()), combine_valid(a.valid, b.valid));
  for (std::size_t i = 0; i < a.size(); ++i) r.values[i] = a.values[i] - b.values[i];
  return r;
}

// Nodes where a gradient of `f` has a complete stencil. Every expectation value
// integrates over this set so that sums of operators stay additive.
std::vector<std::uint8_t> derivative_domain(const Field<C2>& f) {
  const Field<Complex> probe(f.grid, std::vector<Complex>(f.size()), f.valid);
  const Field<CVec3> g = gradient(probe);
  std::vector<std::uint8_t> m(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) m[i] = g.usable(i) ? 1 : 0;
  return m;
}

std::vector<std::uint8_t> usable_mask(const Field<C2>& f) {
  std::vector<std::uint8_t> m(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) m[i] = f.usable(i) ? 1 : 0;
  return m;
}

struct PairOps {
  OpId a, b;
};

PairOps pair_ops(PairId p) {
  switch (p) {
    case PairId::PositionLab: return {OpId::PositionLab, OpId::PositionLab};
    case PairId::CanonicalPair: return {OpId::CanonicalPosition, OpId::Momentum};
    case PairId::CanonicalPosition: return {OpId::CanonicalPosition, OpId::CanonicalPosition};
    case PairId::Oam: return {OpId::OamTotal, OpId::OamTotal};
    case PairId::OamSpin: return {OpId::OamTotal, OpId::Spin};
    case PairId::J: return {OpId::JTotal, OpId::JTotal};
    case PairId::SpinLab: return {OpId::Spin, OpId::Spin};
    case PairId::Lambda: return {OpId::OamLambda, OpId::OamLambda};
    case PairId::M: return {OpId::OamM, OpId::OamM};
  }
  return {OpId::Momentum, OpId::Momentum};
}

// Geometric fields (A_I, phi) vary on the scale |k|; their stencil errors on the
// reference boxes stay below 0.05 h^4, so 2 h^4 is a loose ceiling.
constexpr double kFdConstant = 2.0;

// Nested derivatives of an envelope err by ~ (h / spread)^4 independently of k0.
// Measured on 32^3 boxes over +-6 spreads: oam and j rows reach 0.043 (h / spread)^4.
constexpr double kCommutatorConstant = 0.2;

}  // namespace

std::string_view to_string(OpId op) {
  switch (op) {
    case OpId::Momentum: return "momentum";
    case OpId::CanonicalPosition: return "canonical_position";
    case OpId::PositionLab: return "position_lab";
    case OpId::BerryConnection: return "berry_connection";
    case OpId::Spin: return "spin";
    case OpId::Helicity: return "helicity";
    case OpId::OamLambda: return "oam_lambda";
    case OpId::OamM: return "oam_m";
    case OpId::OamTotal: return "oam_total";
    case OpId::JTotal: return "j_total";
  }
  return "unknown";
}

std::string_view to_string(PairId p) {
  switch (p) {
    case PairId::PositionLab: return "position_lab";
    case PairId::CanonicalPair: return "canonical_pair";
    case PairId::CanonicalPosition: return "canonical_position";
    case PairId::Oam: return "oam";
    case PairId::OamSpin: return "oam_spin";
    case PairId::J: return "j";
    case PairId::SpinLab: return "spin_lab";
    case PairId::Lambda: return "lambda";
    case PairId::M: return "m";
  }
  return "unknown";
}

OpId op_from_string(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(OpId::JTotal); ++i)
    if (to_string(static_cast<OpId>(i)) == name) return static_cast<OpId>(i);
  throw Error(ErrorCode::InvalidArgument, "unknown operator '" + std::string(name) + "'");
}

PairId pair_from_string(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(PairId::M); ++i)
    if (to_string(static_cast<PairId>(i)) == name) return static_cast<PairId>(i);
  throw Error(ErrorCode::InvalidArgument, "unknown commutator pair '" + std::string(name) + "'");
}

bool is_vector(OpId op) { return op != OpId::Helicity; }

BerryConnection berry_potential(const Vec3& I_in, const GridPtr& grid) {
  const Vec3 I = I_in.normalized();
  if (!grid->covers(I))
    throw Error(ErrorCode::MaskMismatch, "grid mask does not exclude the singular line of I");
  const auto& g = *grid;
  std::vector<Vec3> A(g.size(), Vec3::Zero());
  std::vector<std::uint8_t> ok(g.size(), 1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const NodeFrame nf = node_frame(I, g.node(i));
    if (nf.ok)
      A[i] = nf.A;
    else
      ok[i] = 0;
  }
  return {Field<Vec3>(grid, std::move(A), std::move(ok)), I};
}

Field<Vec3> berry_curvature(const BerryConnection& conn) {
  const auto& A = conn.A;
  std::array<Field<CVec3>, 3> d;
  for (int c = 0; c < 3; ++c) {
    Field<Complex> comp(A.grid, std::vector<Complex>(A.size()), A.valid);
    for (std::size_t i = 0; i < A.size(); ++i) comp.values[i] = A.values[i][c];
    d[c] = gradient(comp);
  }
  // d[c].values[i][a] = dA_c / dk_a
  std::vector<Vec3> out(A.size(), Vec3::Zero());
  std::vector<std::uint8_t> ok(A.size(), 1);
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (!(d[0].usable(i) && d[1].usable(i) && d[2].usable(i))) {
      ok[i] = 0;
      continue;
    }
    out[i] = Vec3(d[2].values[i][1].real() - d[1].values[i][2].real(),
                  d[0].values[i][2].real() - d[2].values[i][0].real(),
                  d[1].values[i][0].real() - d[0].values[i][1].real());
  }
  return Field<Vec3>(A.grid, std::move(out), std::move(ok));
}

Vec3 berry_curvature_closed_form(const Vec3& k) { return -k / std::pow(k.norm(), 3); }

double monopole_flux(const KGrid& g, int a) {
  if (g.kind() != GridKind::SphericalProduct)
    throw Error(ErrorCode::GridMismatch, "flux needs a spherical product grid");
  std::vector<double> x, wp;
  gauss_legendre(g.shape()[1], x, wp);
  const double R = g.radii().at(a);
  const double dphi = 2.0 * kPi / g.shape()[2];
  double flux = 0.0;
  for (int b = 0; b < g.shape()[1]; ++b)
    for (int c = 0; c < g.shape()[2]; ++c) {
      const Vec3& k = g.node(g.index(a, b, c));
      flux += wp[b] * dphi * R * R * berry_curvature_closed_form(k).dot(k / R);
    }
  return flux;
}

Field<C2> apply_component(OpId op, int axis, const Field<C2>& f, const Vec3& I_in) {
  const KGrid& g = *f.grid;
  const Vec3 I = I_in.normalized();
  const double hbar = g.config().hbar;
  const std::size_t n = f.size();
  std::array<Field<CVec3>, 2> G;
  if (needs_gradient(op)) G = gradient2(f);

  std::vector<C2> out(n, C2::Zero());
  std::vector<std::uint8_t> ok(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!f.usable(i) || (needs_gradient(op) && !(G[0].usable(i) && G[1].usable(i)))) {
      ok[i] = 0;
      continue;
    }
    const Vec3& k = g.node(i);
    const C2& x = f.values[i];
    NodeFrame nf;
    if (needs_frame(op)) {
      nf = node_frame(I, k);
      if (!nf.ok) singular(std::string(to_string(op)).c_str());
    }
    auto grad = [&](int a) { return C2(G[0].values[i][a], G[1].values[i][a]); };
    auto lambda = [&]() {
      const int b = (axis + 1) % 3, c = (axis + 2) % 3;
      return C2(-kI * hbar * (k[b] * grad(c) - k[c] * grad(b)));
    };
    auto m = [&]() { return C2(hbar * nf.c * nf.u[axis] * apply_sigma(x)); };
    auto spin = [&]() { return C2(hbar * k[axis] / k.norm() * apply_sigma(x)); };
    switch (op) {
      case OpId::Momentum: out[i] = hbar * k[axis] * x; break;
      case OpId::CanonicalPosition: out[i] = kI * grad(axis); break;
      case OpId::PositionLab: out[i] = kI * grad(axis) + nf.A[axis] * apply_sigma(x); break;
      case OpId::BerryConnection: out[i] = nf.A[axis] * apply_sigma(x); break;
      case OpId::Spin: out[i] = spin(); break;
      case OpId::Helicity: out[i] = apply_sigma(x); break;
      case OpId::OamLambda: out[i] = lambda(); break;
      case OpId::OamM: out[i] = m(); break;
      case OpId::OamTotal: out[i] = lambda() + m(); break;
      case OpId::JTotal: out[i] = lambda() + m() + spin(); break;
    }
  }
  return Field<C2>(f.grid, std::move(out), std::move(ok));
}

std::vector<TwoCompState> apply(OpId op, const TwoCompState& s) {
  std::vector<TwoCompState> out;
  const int ncomp = is_vector(op) ? 3 : 1;
  for (int a = 0; a < ncomp; ++a)
    out.push_back(TwoCompState{apply_component(op, a, s.ftilde, s.I), s.I, s.t});
  return out;
}

ObservableReport expect(OpId op, const TwoCompState& s) {
  std::vector<Complex> value, reference;
  const int ncomp = is_vector(op) ? 3 : 1;
  const auto domain = derivative_domain(s.ftilde);
  for (int a = 0; a < ncomp; ++a) {
    const Complex v = braket(s.ftilde, apply_component(op, a, s.ftilde, s.I), domain);
    value.push_back(v);
    reference.emplace_back(v.real(), 0.0);
  }
  auto r = ObservableReport::compare(std::string(to_string(op)), std::move(value),
                                     std::move(reference), 10.0 * s.grid().config().tol_quad);
  r.note = "reference is the real part";
  return r;
}

ObservableReport expect_square(OpId op, const TwoCompState& s) {
  Complex total = 0.0;
  const int ncomp = is_vector(op) ? 3 : 1;
  for (int a = 0; a < ncomp; ++a) {
    const auto once = apply_component(op, a, s.ftilde, s.I);
    total += braket(s.ftilde, apply_component(op, a, once, s.I), interior_nodes(s.grid()));
  }
  auto r = ObservableReport::compare(std::string(to_string(op)) + "^2", {total},
                                     {Complex(total.real(), 0.0)},
                                     10.0 * s.grid().config().tol_quad);
  r.note = "reference is the real part";
  return r;
}

Barycenter barycenter(const TwoCompState& s) {
  Barycenter b;
  const auto rb = expect(OpId::BerryConnection, s);
  const auto rc = expect(OpId::CanonicalPosition, s);
  for (int a = 0; a < 3; ++a) {
    b.b[a] = rb.value[a].real();
    b.canonical_center[a] = rc.value[a].real();
  }
  return b;
}

Vec3 barycenter_eigenvalue(const Vec3& I_in, const Vec3& k0, int sigma) {
  const Vec3 I = I_in.normalized();
  const Vec3 ixk = I.cross(k0);
  const double s2 = ixk.squaredNorm();
  if (s2 < kSingularThreshold * kSingularThreshold * k0.squaredNorm())
    throw Error(ErrorCode::SingularLine, "k0 on the singular line of I");
  return sigma * I.dot(k0) / (k0.norm() * s2) * ixk;
}

std::vector<std::uint8_t> interior_nodes(const KGrid& g) {
  std::vector<std::uint8_t> m(g.size(), 1);
  if (g.kind() != GridKind::UniformBox) return m;
  const int r = g.config().fd_order / 2;
  const auto& sh = g.shape();
  for (int a = 0; a < sh[0]; ++a)
    for (int b = 0; b < sh[1]; ++b)
      for (int c = 0; c < sh[2]; ++c) {
        const bool in = a >= r && a < sh[0] - r && b >= r && b < sh[1] - r && c >= r && c < sh[2] - r;
        m[g.index(a, b, c)] = in ? 1 : 0;
      }
  return m;
}

double grid_resolution(const TwoCompState& s) {
  const KGrid& g = s.grid();
  if (g.kind() != GridKind::UniformBox) return 0.0;
  Vec3 m1 = Vec3::Zero(), m2 = Vec3::Zero();
  double m0 = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!s.ftilde.usable(n)) continue;
    const double p = g.weight(n) * s.ftilde.values[n].squaredNorm();
    const Vec3& k = g.node(n);
    m0 += p;
    m1 += p * k;
    m2 += p * k.cwiseProduct(k);
  }
  if (!(m0 > 0.0)) throw Error(ErrorCode::AmplitudeTooSmall, "state has no weight on the grid");
  m1 /= m0;
  m2 /= m0;
  double r = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double spread = std::sqrt(std::max(m2[a] - m1[a] * m1[a], 0.0));
    r = std::max(r, spread > 0.0 ? g.spacing()[a] / spread : std::numeric_limits<double>::infinity());
  }
  return r;
}

double derivative_tolerance(const TwoCompState& s, double scale) {
  const KGrid& g = s.grid();
  const double floor = 10.0 * g.config().tol_quad;
  if (g.kind() != GridKind::UniformBox) return floor;
  return std::max(floor, kCommutatorConstant * scale * std::pow(grid_resolution(s), g.config().fd_order));
}

double commutator_tolerance(PairId pair, const TwoCompState& s) {
  const KGrid& g = s.grid();
  const double tol_quad = g.config().tol_quad;
  if (pair == PairId::SpinLab || pair == PairId::M) return 10.0 * tol_quad;
  const double base = 10.0 * g.config().tol_fd;
  if (pair == PairId::CanonicalPair || pair == PairId::CanonicalPosition) return base;
  if (g.kind() != GridKind::UniformBox) return base;
  const double fd = kCommutatorConstant * std::pow(grid_resolution(s), g.config().fd_order);
  if (pair == PairId::PositionLab) {
    // [x_i, x_j] carries units of 1/k^2.
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
      if (!s.ftilde.usable(n)) continue;
      const double p = g.weight(n) * s.ftilde.values[n].squaredNorm();
      num += p / g.node(n).squaredNorm();
      den += p;
    }
    return std::max(10.0 * tol_quad, fd * num / den);
  }
  const double hbar = g.config().hbar;
  return std::max(base, fd * hbar * hbar);
}

double fd_tolerance(const KGrid& g) {
  const double base = 10.0 * g.config().tol_fd;
  if (g.kind() != GridKind::UniformBox) return base;
  return std::max(base, kFdConstant * std::pow(g.max_spacing(), g.config().fd_order));
}

ObservableReport commutator_expect(PairId pair, const TwoCompState& s, int i, int j) {
  const KGrid& g = s.grid();
  const double hbar = g.config().hbar;
  const std::string name = std::string(to_string(pair)) + "[" + "xyz"[i] + "," + "xyz"[j] + "]";
  const double tol = commutator_tolerance(pair, s);

  if (pair == PairId::SpinLab) {
    const VectorState lab = to_lab(s);
    const auto si = apply_lab(LabOpId::Spin, i, lab.f, s.I);
    const auto sj = apply_lab(LabOpId::Spin, j, lab.f, s.I);
    const auto sisj = apply_lab(LabOpId::Spin, i, sj, s.I);
    const auto sjsi = apply_lab(LabOpId::Spin, j, si, s.I);
    Field<CVec3> diff(lab.f.grid, std::vector<CVec3>(lab.f.size()), combine_valid(sisj.valid, sjsi.valid));
    for (std::size_t n = 0; n < diff.size(); ++n) diff.values[n] = sisj.values[n] - sjsi.values[n];
    return ObservableReport::compare(name, {braket(lab.f, diff)}, {Complex(0.0)}, tol);
  }

  const auto [A, B] = pair_ops(pair);
  const auto& f = s.ftilde;
  const auto Af = apply_component(A, i, f, s.I);
  const auto Bf = apply_component(B, j, f, s.I);
  const auto AB = apply_component(A, i, Bf, s.I);
  const auto BA = apply_component(B, j, Af, s.I);
  const auto comm = subtract(AB, BA);
  const auto nodes = combine_valid(usable_mask(comm), interior_nodes(g));
  const Complex value = braket(f, comm, nodes);

  Complex ref = 0.0;
  auto levi = [&](auto&& term) {
    for (int k = 0; k < 3; ++k)
      if (const int e = eps(i, j, k); e != 0) ref += double(e) * term(k);
  };
  switch (pair) {
    case PairId::PositionLab:
      levi([&](int k) {
        std::vector<C2> hs(f.size(), C2::Zero());
        for (std::size_t n = 0; n < f.size(); ++n)
          hs[n] = berry_curvature_closed_form(g.node(n))[k] * apply_sigma(f.values[n]);
        return kI * braket(f, Field<C2>(f.grid, std::move(hs), f.valid), nodes);
      });
      break;
    case PairId::CanonicalPair:
      ref = i == j ? kI * hbar : Complex(0.0);
      break;
    case PairId::CanonicalPosition:
    case PairId::M:
      break;
    case PairId::Oam:
      levi([&](int k) {
        const auto l = apply_component(OpId::OamTotal, k, f, s.I);
        const auto sk = apply_component(OpId::Spin, k, f, s.I);
        return kI * hbar * braket(f, subtract(l, sk), nodes);
      });
      break;
    case PairId::OamSpin:
      levi([&](int k) { return kI * hbar * braket(f, apply_component(OpId::Spin, k, f, s.I), nodes); });
      break;
    case PairId::J:
      levi([&](int k) { return kI * hbar * braket(f, apply_component(OpId::JTotal, k, f, s.I), nodes); });
      break;
    case PairId::Lambda:
      levi([&](int k) {
        return kI * hbar * braket(f, apply_component(OpId::OamLambda, k, f, s.I), nodes);
      });
      break;
    case PairId::SpinLab:
      break;
  }
  return ObservableReport::compare(name, {value}, {ref}, tol);
}

Field<CVec3> apply_lab(LabOpId op, int axis, const Field<CVec3>& f, const Vec3& I_in) {
  const KGrid& g = *f.grid;
  const Vec3 I = I_in.normalized();
  const double hbar = g.config().hbar;
  const std::size_t n = f.size();
  const bool grad = op == LabOpId::Position || op == LabOpId::IntrinsicPosition;
  const bool frame = op == LabOpId::IntrinsicPosition || op == LabOpId::Barycenter;
  std::array<Field<CVec3>, 3> G;
  if (grad) G = gradient3(f);

  std::vector<CVec3> out(n, CVec3::Zero());
  std::vector<std::uint8_t> ok(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!f.usable(i) || (grad && !(G[0].usable(i) && G[1].usable(i) && G[2].usable(i)))) {
      ok[i] = 0;
      continue;
    }
    const Vec3& k = g.node(i);
    const Vec3 w = k / k.norm();
    const CVec3& x = f.values[i];
    const CVec3 wc = w.cast<Complex>();
    const CVec3 helic = kI * cross(wc, x);  // Sigma_w x
    NodeFrame nf;
    if (frame) {
      nf = node_frame(I, k);
      if (!nf.ok) singular("lab operator");
    }
    CVec3 pos = CVec3::Zero();
    if (grad) {
      const CVec3 d(G[0].values[i][axis], G[1].values[i][axis], G[2].values[i][axis]);
      pos = kI * d;
      pos -= wc * wc.dot(pos);  // w is real, so dot() conjugation is harmless
    }
    switch (op) {
      case LabOpId::Position: out[i] = pos; break;
      case LabOpId::IntrinsicPosition: out[i] = pos - nf.A[axis] * helic; break;
      case LabOpId::Barycenter: out[i] = nf.A[axis] * helic; break;
      case LabOpId::Spin: out[i] = hbar * w[axis] * helic; break;
      case LabOpId::Helicity: out[i] = helic; break;
    }
  }
  return Field<CVec3>(f.grid, std::move(out), std::move(ok));
}

std::vector<Complex> expect_lab(LabOpId op, const VectorState& s, const Vec3& I) {
  std::vector<Complex> out;
  const int ncomp = op == LabOpId::Helicity ? 1 : 3;
  for (int a = 0; a < ncomp; ++a) out.push_back(braket(s.f, apply_lab(op, a, s.f, I)));
  return out;
}

double spin_squared(const VectorState& s) {
  const double hbar = s.grid().config().hbar;
  Complex total = 0.0;
  for (int a = 0; a < 3; ++a) {
    const auto once = apply_lab(LabOpId::Spin, a, s.f, Vec3::UnitZ());
    total += braket(s.f, apply_lab(LabOpId::Spin, a, once, Vec3::UnitZ()));
  }
  return total.real() / (hbar * hbar * norm_squared(s));
}

double pryce_residual(const VectorState& s) {
  const auto& g = s.grid();
  const double hbar = g.config().hbar;
  Field<double> num(s.f.grid, std::vector<double>(s.f.size()), s.f.valid);
  Field<double> den(s.f.grid, std::vector<double>(s.f.size()), s.f.valid);
  for (std::size_t i = 0; i < s.f.size(); ++i) {
    const Vec3& k = g.node(i);
    const Vec3 w = k / k.norm();
    const CVec3 helic = kI * cross(w, s.f.values[i]);
    std::array<CVec3, 3> S;
    for (int c = 0; c < 3; ++c) S[c] = hbar * w[c] * helic;
    double acc = 0.0;
    for (int a = 0; a < 3; ++a) {
      const int b = (a + 1) % 3, c = (a + 2) % 3;
      acc += (k[b] * S[c] - k[c] * S[b]).squaredNorm();
    }
    num.values[i] = acc;
    den.values[i] = hbar * hbar * k.squaredNorm() * s.f.values[i].squaredNorm();
  }
  return quadrature(num) / quadrature(den);
}

Vec3 helicity_gradient_expect(const VectorState& s) {
  const auto& g = s.grid();
  Vec3 out = Vec3::Zero();
  for (int a = 0; a < 3; ++a) {
    Field<Complex> d(s.f.grid, std::vector<Complex>(s.f.size()), s.f.valid);
    for (std::size_t i = 0; i < s.f.size(); ++i) {
      const Vec3& k = g.node(i);
      const Vec3 w = k / k.norm();
      const Mat3c m = (spin_matrix(a) - w[a] * helicity_matrix_lab(w)) / k.norm();
      d.values[i] = s.f.values[i].dot(m * s.f.values[i]);
    }
    out[a] = quadrature(d).real();
  }
  return out;
}

double total_j_identity_residual(const KGrid& g, const Vec3& I_in) {
  const Vec3 I = I_in.normalized();
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.masked(i)) continue;
    const NodeFrame nf = node_frame(I, g.node(i));
    if (!nf.ok) continue;
    const Vec3 rhs = I.cross(nf.v) / I.dot(nf.u);
    const Vec3 lhs = nf.w + nf.c * nf.u;
    worst = std::max(worst, (lhs - rhs).norm() / rhs.norm());
  }
  return worst;
}

}  // namespace helika
