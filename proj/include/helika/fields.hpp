#pragma once

#include <array>
#include <string>
#include <vector>

#include "helika/states.hpp"

namespace helika {

/// Periodic real-space lattice reciprocal to a box k-grid: spacing 2 pi / (N h) per axis,
/// nodes X_n = center + (n - N/2) spacing.
struct RealGrid {
  std::array<int, 3> shape{0, 0, 0};
  Vec3 spacing = Vec3::Zero();
  Vec3 center = Vec3::Zero();
  GridPtr kgrid;

  std::size_t size() const { return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2]; }
  std::size_t index(int a, int b, int c) const {
    return (static_cast<std::size_t>(a) * shape[1] + b) * shape[2] + c;
  }
  Vec3 position(int a, int b, int c) const;
  Vec3 origin() const { return position(0, 0, 0); }
  double cell_volume() const { return spacing.prod(); }
};

/// Throws GridMismatch for non-box grids or shapes smaller than the k-lattice, and
/// NyquistViolation unless N h / 2 exceeds max |k_i| on every axis.
RealGrid matched_real_grid(const GridPtr& kgrid, std::array<int, 3> shape,
                           const Vec3& center = Vec3::Zero());

/// Smallest FFT-friendly shape (factors 2, 3, 5) that passes the Nyquist test.
std::array<int, 3> minimal_real_shape(const KGrid& kgrid);

struct FieldSnapshot {
  RealGrid grid;
  std::vector<Vec3> E, H;
  double t = 0.0;
  std::string source;
};

enum class FieldKind { E, H, A };

/// 2 Re of (2 pi)^(-3/2) sum_k w_k c(k) exp(i k.X), with c the mode coefficient of `kind`.
std::vector<Vec3> synthesize(const VectorState& s, const RealGrid& rg, FieldKind kind);
std::vector<double> spectral_divergence(const VectorState& s, const RealGrid& rg, FieldKind kind);
std::vector<Vec3> spectral_curl(const VectorState& s, const RealGrid& rg, FieldKind kind);

FieldSnapshot reconstruct(const VectorState& s, const RealGrid& rg, std::string source = {});
/// Coulomb-gauge potential with E = -dA/dt.
std::vector<Vec3> vector_potential(const VectorState& s, const RealGrid& rg);

struct MaxwellResiduals {
  double dt = 0.0;
  double div_E = 0.0, div_H = 0.0, div_A = 0.0;  // max |div| / (k_max max |field|)
  double curl_H = 0.0;   // |eps0 dE/dt - curl H| / max |curl H|
  double curl_E = 0.0;   // |mu0 dH/dt + curl E| / max |curl E|
  double e_from_a = 0.0; // |E + dA/dt| / max |E|
  double h_from_a = 0.0; // |mu0 H - curl A| / max |mu0 H|
  double time_tolerance = 0.0;  // 2 (omega_max dt)^2 / 6 + 1e-9
};

/// dt <= 0 selects the default 1e-3 / omega_max. Time derivatives use evolve(+-dt).
MaxwellResiduals maxwell_residuals(const VectorState& s, const RealGrid& rg, double dt = 0.0);

/// Trapezoid (periodic) integral of (eps0 E^2 + mu0 H^2) / 2. Throws BoxLeakage when
/// the energy density on the box faces exceeds 1e-8 of its peak.
double realspace_energy(const FieldSnapshot& snap);
/// eps0 mu0 sum X x (E x H) dV, with the same leakage test weighted by |X|.
Vec3 realspace_angular_momentum(const FieldSnapshot& snap);
/// sum w hbar omega |f|^2.
double kspace_energy(const VectorState& s);

/// Binary volume: "HLKV", u32 version, i32 shape[3], f64 spacing[3], f64 origin[3],
/// f64 time, i32 ncomp (6: Ex Ey Ez Hx Hy Hz), then row-major little-endian payload.
void write_volume(const std::string& path, const FieldSnapshot& snap);
FieldSnapshot read_volume(const std::string& path);

/// CSV slice at `index` along `axis`: x,y,z,Ex,Ey,Ez,Hx,Hy,Hz.
void write_slice_csv(const std::string& path, const FieldSnapshot& snap, int axis, int index);

}  // namespace helika
