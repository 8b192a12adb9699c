#include "helika/fields.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>

#include <fftw3.h>

namespace helika {

namespace {

constexpr double kLeakage = 1e-8;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Owns one in-place backward 3D transform of the real-grid shape.
class Synthesizer {
 public:
  explicit Synthesizer(const RealGrid& rg) : rg_(rg), n_(rg.size()) {
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_));
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_ = fftw_plan_dft_3d(rg.shape[0], rg.shape[1], rg.shape[2], buf_, buf_, FFTW_BACKWARD,
                             FFTW_ESTIMATE);
    const KGrid& g = *rg.kgrid;
    const Vec3 ks = g.box().center - g.box().half_widths;
    const Vec3 x0 = rg.origin();
    for (int a = 0; a < 3; ++a) {
      const double h = g.spacing()[a];
      pre_[a].resize(g.shape()[a]);
      for (int j = 0; j < g.shape()[a]; ++j) pre_[a][j] = std::polar(1.0, j * h * x0[a]);
      post_[a].resize(rg.shape[a]);
      for (int n = 0; n < rg.shape[a]; ++n)
        post_[a][n] = std::polar(1.0, ks[a] * (x0[a] + n * rg.spacing[a]));
    }
  }
  ~Synthesizer() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(buf_);
  }
  Synthesizer(const Synthesizer&) = delete;
  Synthesizer& operator=(const Synthesizer&) = delete;

  // Complex sum (2 pi)^(-3/2) sum_j w_j c_j exp(i k_j . X_n) on the real grid.
  std::vector<Complex> run(const std::vector<Complex>& coeff) {
    const KGrid& g = *rg_.kgrid;
    std::memset(buf_, 0, sizeof(fftw_complex) * n_);
    const auto& ks = g.shape();
    for (int a = 0; a < ks[0]; ++a)
      for (int b = 0; b < ks[1]; ++b)
        for (int c = 0; c < ks[2]; ++c) {
          const std::size_t src = g.index(a, b, c);
          const Complex v = coeff[src] * g.weight(src) * pre_[0][a] * pre_[1][b] * pre_[2][c];
          const std::size_t dst = rg_.index(a, b, c);
          buf_[dst][0] = v.real();
          buf_[dst][1] = v.imag();
        }
    fftw_execute(plan_);
    const double norm = std::pow(2.0 * kPi, -1.5);
    std::vector<Complex> out(n_);
    for (int a = 0; a < rg_.shape[0]; ++a)
      for (int b = 0; b < rg_.shape[1]; ++b)
        for (int c = 0; c < rg_.shape[2]; ++c) {
          const std::size_t i = rg_.index(a, b, c);
          out[i] = norm * Complex(buf_[i][0], buf_[i][1]) * post_[0][a] * post_[1][b] * post_[2][c];
        }
    return out;
  }

 private:
  const RealGrid& rg_;
  std::size_t n_;
  fftw_complex* buf_ = nullptr;
  fftw_plan plan_ = nullptr;
  std::array<std::vector<Complex>, 3> pre_, post_;
};

void check_state(const VectorState& s, const RealGrid& rg) {
  if (!rg.kgrid || !s.grid().same_as(*rg.kgrid))
    throw Error(ErrorCode::GridMismatch, "state is not on the real grid's k-lattice");
}

// Mode coefficients of E, H or A at every usable node.
std::vector<CVec3> coefficients(const VectorState& s, FieldKind kind) {
  const KGrid& g = s.grid();
  const Config& cfg = g.config();
  std::vector<CVec3> out(g.size(), CVec3::Zero());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!s.f.usable(i)) continue;
    const Vec3& k = g.node(i);
    const double omega = cfg.c * k.norm();
    const CVec3& f = s.f.values[i];
    switch (kind) {
      case FieldKind::E: out[i] = std::sqrt(cfg.hbar * omega / (2.0 * cfg.eps0)) * f; break;
      case FieldKind::H:
        out[i] = std::sqrt(cfg.hbar * omega / (2.0 * cfg.mu0())) *
                 cross(Vec3(k / k.norm()), f);
        break;
      case FieldKind::A: out[i] = -kI * std::sqrt(cfg.hbar / (2.0 * cfg.eps0 * omega)) * f; break;
    }
  }
  return out;
}

std::vector<Vec3> synth_vec(Synthesizer& syn, const std::vector<CVec3>& coeff) {
  std::vector<Vec3> out;
  std::vector<Complex> comp(coeff.size());
  for (int a = 0; a < 3; ++a) {
    for (std::size_t i = 0; i < coeff.size(); ++i) comp[i] = coeff[i][a];
    const auto r = syn.run(comp);
    if (out.empty()) out.assign(r.size(), Vec3::Zero());
    for (std::size_t i = 0; i < r.size(); ++i) out[i][a] = 2.0 * r[i].real();
  }
  return out;
}

std::vector<double> synth_scalar(Synthesizer& syn, const std::vector<Complex>& coeff) {
  const auto r = syn.run(coeff);
  std::vector<double> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = 2.0 * r[i].real();
  return out;
}

std::vector<Complex> divergence_coeff(const VectorState& s, const std::vector<CVec3>& c) {
  std::vector<Complex> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i)
    out[i] = kI * s.grid().node(i).cast<Complex>().dot(c[i]);
  return out;
}

std::vector<CVec3> curl_coeff(const VectorState& s, const std::vector<CVec3>& c) {
  std::vector<CVec3> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = kI * cross(s.grid().node(i), c[i]);
  return out;
}

double max_norm(const std::vector<Vec3>& v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, x.norm());
  return m;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double max_diff(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double scale_b = 1.0) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - scale_b * b[i]).norm());
  return m;
}

double k_max(const KGrid& g) {
  double m = 0.0;
  for (const auto& k : g.nodes()) m = std::max(m, k.norm());
  return m;
}

bool on_face(const RealGrid& rg, int a, int b, int c) {
  return a == 0 || b == 0 || c == 0 || a == rg.shape[0] - 1 || b == rg.shape[1] - 1 ||
         c == rg.shape[2] - 1;
}

std::vector<double> energy_density(const FieldSnapshot& snap) {
  const Config& cfg = snap.grid.kgrid ? snap.grid.kgrid->config() : Config{};
  std::vector<double> u(snap.E.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    u[i] = 0.5 * (cfg.eps0 * snap.E[i].squaredNorm() + cfg.mu0() * snap.H[i].squaredNorm());
  return u;
}

void check_leakage(const RealGrid& rg, const std::vector<double>& density, const char* what) {
  double peak = 0.0, face = 0.0;
  for (int a = 0; a < rg.shape[0]; ++a)
    for (int b = 0; b < rg.shape[1]; ++b)
      for (int c = 0; c < rg.shape[2]; ++c) {
        const double d = density[rg.index(a, b, c)];
        peak = std::max(peak, d);
        if (on_face(rg, a, b, c)) face = std::max(face, d);
      }
  if (face > kLeakage * peak)
    throw Error(ErrorCode::BoxLeakage, std::string(what) + " on the box faces reaches " +
                                           std::to_string(face / peak) + " of its peak");
}

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(ErrorCode::IoError, "truncated volume file");
  return v;
}

int nice_size(int n) {
  for (;; ++n) {
    int m = n;
    for (int p : {2, 3, 5})
      while (m % p == 0) m /= p;
    if (m == 1 && n % 2 == 0) return n;
  }
}

}  // namespace

Vec3 RealGrid::position(int a, int b, int c) const {
  return center + Vec3((a - shape[0] / 2) * spacing[0], (b - shape[1] / 2) * spacing[1],
                       (c - shape[2] / 2) * spacing[2]);
}

RealGrid matched_real_grid(const GridPtr& kgrid, std::array<int, 3> shape, const Vec3& center) {
  if (kgrid->kind() != GridKind::UniformBox)
    throw Error(ErrorCode::GridMismatch, "real-space reconstruction needs a box k-grid");
  const KGrid& g = *kgrid;
  RealGrid rg;
  rg.shape = shape;
  rg.center = center;
  rg.kgrid = kgrid;
  for (int a = 0; a < 3; ++a) {
    if (shape[a] < g.shape()[a])
      throw Error(ErrorCode::GridMismatch, "real grid has fewer points than the k-lattice");
    const double h = g.spacing()[a];
    const double kmax = std::abs(g.box().center[a]) + g.box().half_widths[a];
    if (!(0.5 * shape[a] * h > kmax))
      throw Error(ErrorCode::NyquistViolation,
                  "axis " + std::to_string(a) + " needs N h / 2 > " + std::to_string(kmax));
    rg.spacing[a] = 2.0 * kPi / (shape[a] * h);
  }
  return rg;
}

std::array<int, 3> minimal_real_shape(const KGrid& g) {
  std::array<int, 3> s{};
  for (int a = 0; a < 3; ++a) {
    const double kmax = std::abs(g.box().center[a]) + g.box().half_widths[a];
    const int need = static_cast<int>(std::floor(2.0 * kmax / g.spacing()[a])) + 1;
    s[a] = nice_size(std::max(need, g.shape()[a]));
  }
  return s;
}

std::vector<Vec3> synthesize(const VectorState& s, const RealGrid& rg, FieldKind kind) {
  check_state(s, rg);
  Synthesizer syn(rg);
  return synth_vec(syn, coefficients(s, kind));
}

std::vector<double> spectral_divergence(const VectorState& s, const RealGrid& rg, FieldKind kind) {
  check_state(s, rg);
  Synthesizer syn(rg);
  return synth_scalar(syn, divergence_coeff(s, coefficients(s, kind)));
}

std::vector<Vec3> spectral_curl(const VectorState& s, const RealGrid& rg, FieldKind kind) {
  check_state(s, rg);
  Synthesizer syn(rg);
  return synth_vec(syn, curl_coeff(s, coefficients(s, kind)));
}

FieldSnapshot reconstruct(const VectorState& s, const RealGrid& rg, std::string source) {
  check_state(s, rg);
  Synthesizer syn(rg);
  FieldSnapshot snap;
  snap.grid = rg;
  snap.E = synth_vec(syn, coefficients(s, FieldKind::E));
  snap.H = synth_vec(syn, coefficients(s, FieldKind::H));
  snap.t = s.t;
  snap.source = std::move(source);
  return snap;
}

std::vector<Vec3> vector_potential(const VectorState& s, const RealGrid& rg) {
  return synthesize(s, rg, FieldKind::A);
}

MaxwellResiduals maxwell_residuals(const VectorState& s, const RealGrid& rg, double dt) {
  check_state(s, rg);
  const Config& cfg = s.grid().config();
  const double kmax = k_max(s.grid());
  const double omega_max = cfg.c * kmax;
  MaxwellResiduals r;
  r.dt = dt > 0.0 ? dt : 1e-3 / omega_max;
  r.time_tolerance = 2.0 * std::pow(omega_max * r.dt, 2) / 6.0 + 1e-9;

  Synthesizer syn(rg);
  const auto cE = coefficients(s, FieldKind::E), cH = coefficients(s, FieldKind::H),
             cA = coefficients(s, FieldKind::A);
  const auto E = synth_vec(syn, cE), H = synth_vec(syn, cH), A = synth_vec(syn, cA);
  r.div_E = max_abs(synth_scalar(syn, divergence_coeff(s, cE))) / (kmax * max_norm(E));
  r.div_H = max_abs(synth_scalar(syn, divergence_coeff(s, cH))) / (kmax * max_norm(H));
  r.div_A = max_abs(synth_scalar(syn, divergence_coeff(s, cA))) / (kmax * max_norm(A));

  const VectorState sp = evolve(s, r.dt), sm = evolve(s, -r.dt);
  const auto Ep = synth_vec(syn, coefficients(sp, FieldKind::E));
  const auto Em = synth_vec(syn, coefficients(sm, FieldKind::E));
  const auto Hp = synth_vec(syn, coefficients(sp, FieldKind::H));
  const auto Hm = synth_vec(syn, coefficients(sm, FieldKind::H));
  const auto Ap = synth_vec(syn, coefficients(sp, FieldKind::A));
  const auto Am = synth_vec(syn, coefficients(sm, FieldKind::A));
  const auto curlH = synth_vec(syn, curl_coeff(s, cH));
  const auto curlE = synth_vec(syn, curl_coeff(s, cE));
  const auto curlA = synth_vec(syn, curl_coeff(s, cA));

  double eh = 0.0, ee = 0.0, ea = 0.0;
  for (std::size_t i = 0; i < E.size(); ++i) {
    const Vec3 dE = (Ep[i] - Em[i]) / (2.0 * r.dt);
    const Vec3 dH = (Hp[i] - Hm[i]) / (2.0 * r.dt);
    const Vec3 dA = (Ap[i] - Am[i]) / (2.0 * r.dt);
    eh = std::max(eh, (cfg.eps0 * dE - curlH[i]).norm());
    ee = std::max(ee, (cfg.mu0() * dH + curlE[i]).norm());
    ea = std::max(ea, (E[i] + dA).norm());
  }
  r.curl_H = eh / max_norm(curlH);
  r.curl_E = ee / max_norm(curlE);
  r.e_from_a = ea / max_norm(E);
  r.h_from_a = max_diff(curlA, H, cfg.mu0()) / (cfg.mu0() * max_norm(H));
  return r;
}

double realspace_energy(const FieldSnapshot& snap) {
  const auto u = energy_density(snap);
  check_leakage(snap.grid, u, "energy density");
  double sum = 0.0;
  for (double x : u) sum += x;
  return sum * snap.grid.cell_volume();
}

Vec3 realspace_angular_momentum(const FieldSnapshot& snap) {
  const Config& cfg = snap.grid.kgrid ? snap.grid.kgrid->config() : Config{};
  const RealGrid& rg = snap.grid;
  auto u = energy_density(snap);
  std::vector<double> weighted(u.size());
  Vec3 J = Vec3::Zero();
  for (int a = 0; a < rg.shape[0]; ++a)
    for (int b = 0; b < rg.shape[1]; ++b)
      for (int c = 0; c < rg.shape[2]; ++c) {
        const std::size_t i = rg.index(a, b, c);
        const Vec3 X = rg.position(a, b, c);
        weighted[i] = X.norm() * u[i];
        J += X.cross(snap.E[i].cross(snap.H[i]));
      }
  check_leakage(rg, weighted, "|X|-weighted energy density");
  return cfg.eps0 * cfg.mu0() * rg.cell_volume() * J;
}

double kspace_energy(const VectorState& s) {
  const KGrid& g = s.grid();
  const Config& cfg = g.config();
  Field<double> d(s.f.grid, std::vector<double>(s.f.size()), s.f.valid);
  for (std::size_t i = 0; i < d.size(); ++i)
    d.values[i] = cfg.hbar * cfg.c * g.node(i).norm() * s.f.values[i].squaredNorm();
  return quadrature(d);
}

void write_volume(const std::string& path, const FieldSnapshot& snap) {
  static_assert(std::endian::native == std::endian::little, "volume files are little-endian");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  out.write("HLKV", 4);
  put(out, std::uint32_t{1});
  for (int a = 0; a < 3; ++a) put(out, std::int32_t(snap.grid.shape[a]));
  for (int a = 0; a < 3; ++a) put(out, snap.grid.spacing[a]);
  const Vec3 o = snap.grid.origin();
  for (int a = 0; a < 3; ++a) put(out, o[a]);
  put(out, snap.t);
  put(out, std::int32_t{6});
  for (std::size_t i = 0; i < snap.E.size(); ++i) {
    for (int a = 0; a < 3; ++a) put(out, snap.E[i][a]);
    for (int a = 0; a < 3; ++a) put(out, snap.H[i][a]);
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

FieldSnapshot read_volume(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "HLKV", 4) != 0) throw Error(ErrorCode::IoError, "not a volume file");
  if (get<std::uint32_t>(in) != 1) throw Error(ErrorCode::IoError, "unsupported volume version");
  FieldSnapshot snap;
  for (int a = 0; a < 3; ++a) {
    snap.grid.shape[a] = get<std::int32_t>(in);
    if (snap.grid.shape[a] <= 0) throw Error(ErrorCode::IoError, "bad volume shape");
  }
  for (int a = 0; a < 3; ++a) snap.grid.spacing[a] = get<double>(in);
  Vec3 o;
  for (int a = 0; a < 3; ++a) o[a] = get<double>(in);
  for (int a = 0; a < 3; ++a) snap.grid.center[a] = o[a] + (snap.grid.shape[a] / 2) * snap.grid.spacing[a];
  snap.t = get<double>(in);
  if (get<std::int32_t>(in) != 6) throw Error(ErrorCode::IoError, "expected 6 components");
  snap.E.resize(snap.grid.size());
  snap.H.resize(snap.grid.size());
  for (std::size_t i = 0; i < snap.grid.size(); ++i) {
    for (int a = 0; a < 3; ++a) snap.E[i][a] = get<double>(in);
    for (int a = 0; a < 3; ++a) snap.H[i][a] = get<double>(in);
  }
  return snap;
}

void write_slice_csv(const std::string& path, const FieldSnapshot& snap, int axis, int index) {
  const RealGrid& rg = snap.grid;
  if (axis < 0 || axis > 2 || index < 0 || index >= rg.shape[axis])
    throw Error(ErrorCode::InvalidArgument, "slice outside the real grid");
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  out.precision(17);
  out << "x,y,z,Ex,Ey,Ez,Hx,Hy,Hz\n";
  for (int a = 0; a < rg.shape[0]; ++a)
    for (int b = 0; b < rg.shape[1]; ++b)
      for (int c = 0; c < rg.shape[2]; ++c) {
        const int pos[3] = {a, b, c};
        if (pos[axis] != index) continue;
        const std::size_t i = rg.index(a, b, c);
        const Vec3 X = rg.position(a, b, c);
        out << X[0] << ',' << X[1] << ',' << X[2];
        for (int d = 0; d < 3; ++d) out << ',' << snap.E[i][d];
        for (int d = 0; d < 3; ++d) out << ',' << snap.H[i][d];
        out << '\n';
      }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace helika
