#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "helika/config.hpp"
#include "helika/linalg.hpp"

namespace helika {

enum class GridKind { UniformBox, SphericalProduct };

struct BoxSpec {
  Vec3 center = Vec3::Zero();
  Vec3 half_widths = Vec3::Ones();
  std::array<int, 3> npts{16, 16, 16};
};

struct ShellSpec {
  double k_min = 1.0;
  double k_max = 2.0;
  int n_rad = 8;
  int n_pol = 8;
  int n_az = 16;
};

class KGrid;
using GridPtr = std::shared_ptr<const KGrid>;

/// Sampled k-space domain: nodes, quadrature weights and the singular-line mask.
///
/// Node ordering is row-major over `shape()`: (ix, iy, iz) for boxes and
/// (radius, polar, azimuth) for spherical product grids, last index fastest.
/// Grids are immutable once built and are shared between fields by pointer.
class KGrid {
 public:
  GridKind kind() const { return kind_; }
  std::size_t size() const { return nodes_.size(); }
  const std::array<int, 3>& shape() const { return shape_; }
  std::span<const Vec3> nodes() const { return nodes_; }
  const Vec3& node(std::size_t i) const { return nodes_[i]; }
  std::span<const double> weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }
  bool masked(std::size_t i) const { return mask_[i] != 0; }
  std::size_t masked_count() const;

  const Vec3& I_ref() const { return I_ref_; }
  double mask_angle() const { return mask_angle_; }
  const std::vector<Vec3>& extra_mask_axes() const { return extra_axes_; }
  const Config& config() const { return config_; }

  const BoxSpec& box() const { return box_; }
  const ShellSpec& shell() const { return shell_; }
  /// Lattice spacing per axis (box grids only).
  const Vec3& spacing() const { return spacing_; }
  double max_spacing() const { return spacing_.maxCoeff(); }

  std::size_t index(int a, int b, int c) const {
    return (static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c;
  }

  // Spherical product metadata.
  const std::vector<double>& radii() const { return radii_; }
  const std::vector<double>& cos_theta() const { return cos_theta_; }
  const std::vector<double>& azimuths() const { return azimuths_; }
  const Eigen::MatrixXd& radial_diff() const { return radial_diff_; }
  const Eigen::MatrixXd& polar_diff() const { return polar_diff_; }

  /// True when every unmasked node keeps a safe angular distance from the line +-I.
  bool covers(const Vec3& I) const;

  /// Same descriptor and constants, so fields on either grid are interchangeable.
  bool same_as(const KGrid& other) const;

 private:
  friend GridPtr build_box_grid(const Vec3&, const Vec3&, std::array<int, 3>, const Vec3&, double,
                                const Config&, std::vector<Vec3>);
  friend GridPtr build_spherical_grid(double, double, int, int, int, const Vec3&, double,
                                      const Config&, std::vector<Vec3>);

  KGrid() = default;
  void apply_mask();

  GridKind kind_ = GridKind::UniformBox;
  std::array<int, 3> shape_{0, 0, 0};
  std::vector<Vec3> nodes_;
  std::vector<double> weights_;
  std::vector<std::uint8_t> mask_;
  Vec3 I_ref_ = Vec3::UnitZ();
  double mask_angle_ = 0.0;
  std::vector<Vec3> extra_axes_;
  Config config_;

  BoxSpec box_;
  Vec3 spacing_ = Vec3::Zero();

  ShellSpec shell_;
  std::vector<double> radii_, cos_theta_, azimuths_;
  Eigen::MatrixXd radial_diff_, polar_diff_;
};

/// Uniform Cartesian lattice with trapezoidal weights. The box must exclude k = 0.
GridPtr build_box_grid(const Vec3& center, const Vec3& half_widths, std::array<int, 3> npts,
                       const Vec3& I_ref, double mask_angle, const Config& config = {},
                       std::vector<Vec3> extra_mask_axes = {});

/// Gauss-Legendre radii and cos(theta) nodes with uniform azimuths; poles are never sampled.
GridPtr build_spherical_grid(double k_min, double k_max, int n_rad, int n_pol, int n_az,
                             const Vec3& I_ref, double mask_angle, const Config& config = {},
                             std::vector<Vec3> extra_mask_axes = {});

/// Values sampled on a grid. `valid` is empty when every unmasked node is usable;
/// derived fields (e.g. gradients) narrow it to nodes whose stencils were complete.
template <class T>
struct Field {
  GridPtr grid;
  std::vector<T> values;
  std::vector<std::uint8_t> valid;

  Field() = default;
  Field(GridPtr g, std::vector<T> v, std::vector<std::uint8_t> ok = {})
      : grid(std::move(g)), values(std::move(v)), valid(std::move(ok)) {}

  std::size_t size() const { return values.size(); }
  bool usable(std::size_t i) const {
    return !grid->masked(i) && (valid.empty() || valid[i] != 0);
  }
};

/// Nodewise validity of the intersection of two fields' usable sets.
std::vector<std::uint8_t> combine_valid(const std::vector<std::uint8_t>& a,
                                        const std::vector<std::uint8_t>& b);

/// Weighted sum over usable nodes, in node order.
Complex quadrature(const Field<Complex>& field);
double quadrature(const Field<double>& field);

/// Cartesian gradient; order set by the grid's Config on boxes, spectral on spheres.
Field<CVec3> gradient(const Field<Complex>& field);

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

/// Derivative matrix of the Lagrange interpolant through `x`.
Eigen::MatrixXd lagrange_diff_matrix(const std::vector<double>& x);

}  // namespace helika
