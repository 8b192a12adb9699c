#include "helika/kgrid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace helika {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BoxContainsOrigin: return "BoxContainsOrigin";
    case ErrorCode::DegenerateAxis: return "DegenerateAxis";
    case ErrorCode::BadShellBounds: return "BadShellBounds";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::SingularLine: return "SingularLine";
    case ErrorCode::MaskMismatch: return "MaskMismatch";
    case ErrorCode::MaskInsufficient: return "MaskInsufficient";
    case ErrorCode::EnvelopeClipped: return "EnvelopeClipped";
    case ErrorCode::NotTransverse: return "NotTransverse";
    case ErrorCode::NotEigenstate: return "NotEigenstate";
    case ErrorCode::AmplitudeTooSmall: return "AmplitudeTooSmall";
    case ErrorCode::NyquistViolation: return "NyquistViolation";
    case ErrorCode::BoxLeakage: return "BoxLeakage";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

// Angular threshold below which a frame built from I is numerically meaningless.
constexpr double kSingularSin = 1e-9;

Vec3 normalized_axis(const Vec3& I, const char* what) {
  const double n = I.norm();
  if (!(n > 0.0) || !std::isfinite(n))
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be a nonzero vector");
  return I / n;
}

void check_mask_angle(double mask_angle) {
  if (!(mask_angle >= 0.0) || !(mask_angle < kPi / 4.0))
    throw Error(ErrorCode::InvalidArgument, "mask_angle must lie in [0, pi/4)");
}

bool near_axis(const Vec3& w, const Vec3& axis, double cos_limit, double mask_angle) {
  if (mask_angle > 0.0 && std::abs(w.dot(axis)) > cos_limit) return true;
  return w.cross(axis).norm() < kSingularSin;
}

}  // namespace

void KGrid::apply_mask() {
  mask_.assign(nodes_.size(), 0);
  if (mask_angle_ <= 0.0) return;
  const double cos_limit = std::cos(mask_angle_);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Vec3 w = nodes_[i].normalized();
    bool hit = std::abs(w.dot(I_ref_)) > cos_limit;
    for (const auto& axis : extra_axes_) hit = hit || std::abs(w.dot(axis)) > cos_limit;
    mask_[i] = hit ? 1 : 0;
  }
}

std::size_t KGrid::masked_count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

bool KGrid::covers(const Vec3& I) const {
  const Vec3 axis = I.normalized();
  const double cos_limit = std::cos(mask_angle_);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (mask_[i]) continue;
    if (near_axis(nodes_[i].normalized(), axis, cos_limit, mask_angle_)) return false;
  }
  return true;
}

bool KGrid::same_as(const KGrid& o) const {
  if (this == &o) return true;
  if (kind_ != o.kind_ || shape_ != o.shape_ || !(config_ == o.config_)) return false;
  if (I_ref_ != o.I_ref_ || mask_angle_ != o.mask_angle_ || extra_axes_ != o.extra_axes_)
    return false;
  if (kind_ == GridKind::UniformBox)
    return box_.center == o.box_.center && box_.half_widths == o.box_.half_widths;
  return shell_.k_min == o.shell_.k_min && shell_.k_max == o.shell_.k_max;
}

GridPtr build_box_grid(const Vec3& center, const Vec3& half_widths, std::array<int, 3> npts,
                       const Vec3& I_ref, double mask_angle, const Config& config,
                       std::vector<Vec3> extra_mask_axes) {
  config.validate();
  check_mask_angle(mask_angle);
  for (int a = 0; a < 3; ++a) {
    if (!(half_widths[a] > 0.0))
      throw Error(ErrorCode::DegenerateAxis, "half width along axis " + std::to_string(a) +
                                                 " must be positive");
    if (npts[a] < 8)
      throw Error(ErrorCode::GridTooCoarse, "box grids need at least 8 points per axis");
  }
  bool origin_inside = true;
  for (int a = 0; a < 3; ++a) origin_inside = origin_inside && std::abs(center[a]) <= half_widths[a];
  if (origin_inside) throw Error(ErrorCode::BoxContainsOrigin, "box must exclude k = 0");

  auto g = std::shared_ptr<KGrid>(new KGrid());
  g->kind_ = GridKind::UniformBox;
  g->shape_ = npts;
  g->config_ = config;
  g->I_ref_ = normalized_axis(I_ref, "I_ref");
  g->mask_angle_ = mask_angle;
  for (auto& ax : extra_mask_axes) ax = normalized_axis(ax, "mask axis");
  g->extra_axes_ = std::move(extra_mask_axes);
  g->box_ = BoxSpec{center, half_widths, npts};

  std::array<std::vector<double>, 3> coord, wt;
  for (int a = 0; a < 3; ++a) {
    const int n = npts[a];
    const double h = 2.0 * half_widths[a] / (n - 1);
    g->spacing_[a] = h;
    coord[a].resize(n);
    wt[a].assign(n, h);
    for (int j = 0; j < n; ++j) coord[a][j] = center[a] - half_widths[a] + j * h;
    wt[a].front() = wt[a].back() = 0.5 * h;
  }
  const std::size_t total = static_cast<std::size_t>(npts[0]) * npts[1] * npts[2];
  g->nodes_.reserve(total);
  g->weights_.reserve(total);
  for (int i = 0; i < npts[0]; ++i)
    for (int j = 0; j < npts[1]; ++j)
      for (int k = 0; k < npts[2]; ++k) {
        g->nodes_.emplace_back(coord[0][i], coord[1][j], coord[2][k]);
        g->weights_.push_back(wt[0][i] * wt[1][j] * wt[2][k]);
      }
  g->apply_mask();
  return g;
}

GridPtr build_spherical_grid(double k_min, double k_max, int n_rad, int n_pol, int n_az,
                             const Vec3& I_ref, double mask_angle, const Config& config,
                             std::vector<Vec3> extra_mask_axes) {
  config.validate();
  check_mask_angle(mask_angle);
  if (!(k_min > 0.0) || !(k_min < k_max))
    throw Error(ErrorCode::BadShellBounds, "need 0 < k_min < k_max");
  if (n_rad < 2 || n_pol < 2 || n_az < 4)
    throw Error(ErrorCode::GridTooCoarse, "spherical grids need n_rad, n_pol >= 2 and n_az >= 4");

  auto g = std::shared_ptr<KGrid>(new KGrid());
  g->kind_ = GridKind::SphericalProduct;
  g->shape_ = {n_rad, n_pol, n_az};
  g->config_ = config;
  g->I_ref_ = normalized_axis(I_ref, "I_ref");
  g->mask_angle_ = mask_angle;
  for (auto& ax : extra_mask_axes) ax = normalized_axis(ax, "mask axis");
  g->extra_axes_ = std::move(extra_mask_axes);
  g->shell_ = ShellSpec{k_min, k_max, n_rad, n_pol, n_az};

  std::vector<double> xr, wr, xp, wp;
  gauss_legendre(n_rad, xr, wr);
  gauss_legendre(n_pol, xp, wp);
  const double half = 0.5 * (k_max - k_min), mid = 0.5 * (k_max + k_min);
  g->radii_.resize(n_rad);
  for (int a = 0; a < n_rad; ++a) g->radii_[a] = mid + half * xr[a];
  g->cos_theta_ = xp;
  g->azimuths_.resize(n_az);
  for (int c = 0; c < n_az; ++c) g->azimuths_[c] = 2.0 * kPi * c / n_az;

  const double dphi = 2.0 * kPi / n_az;
  const std::size_t total = static_cast<std::size_t>(n_rad) * n_pol * n_az;
  g->nodes_.reserve(total);
  g->weights_.reserve(total);
  for (int a = 0; a < n_rad; ++a) {
    const double r = g->radii_[a];
    for (int b = 0; b < n_pol; ++b) {
      const double ct = xp[b], st = std::sqrt(1.0 - ct * ct);
      for (int c = 0; c < n_az; ++c) {
        const double ph = g->azimuths_[c];
        g->nodes_.emplace_back(r * st * std::cos(ph), r * st * std::sin(ph), r * ct);
        g->weights_.push_back(half * wr[a] * r * r * wp[b] * dphi);
      }
    }
  }
  g->radial_diff_ = lagrange_diff_matrix(g->radii_);
  g->polar_diff_ = lagrange_diff_matrix(g->cos_theta_);
  g->apply_mask();
  return g;
}

std::vector<std::uint8_t> combine_valid(const std::vector<std::uint8_t>& a,
                                        const std::vector<std::uint8_t>& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  std::vector<std::uint8_t> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] && b[i]) ? 1 : 0;
  return out;
}

Complex quadrature(const Field<Complex>& field) {
  Complex sum = 0.0;
  const auto& g = *field.grid;
  for (std::size_t i = 0; i < field.size(); ++i)
    if (field.usable(i)) sum += g.weight(i) * field.values[i];
  return sum;
}

double quadrature(const Field<double>& field) {
  double sum = 0.0;
  const auto& g = *field.grid;
  for (std::size_t i = 0; i < field.size(); ++i)
    if (field.usable(i)) sum += g.weight(i) * field.values[i];
  return sum;
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Recompute the derivative at the converged root for the weight.
    double p0 = 1.0, p1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

Eigen::MatrixXd lagrange_diff_matrix(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  // Barycentric weights, rescaled to avoid overflow for moderate n.
  std::vector<double> lam(n, 1.0);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      if (k != j) lam[j] /= (x[j] - x[k]);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double diag = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      D(i, j) = (lam[j] / lam[i]) / (x[i] - x[j]);
      diag -= D(i, j);
    }
    D(i, i) = diag;
  }
  return D;
}

}  // namespace helika
