#pragma once

#include <optional>
#include <variant>

#include "helika/kgrid.hpp"

namespace helika {

/// Laboratory wavefunction f(k): three components constrained by f^dagger k = 0.
struct VectorState {
  Field<CVec3> f;
  double t = 0.0;

  const KGrid& grid() const { return *f.grid; }
};

/// Intrinsic wavefunction: two unconstrained components labeled by the Berry vector I.
struct TwoCompState {
  Field<C2> ftilde;
  Vec3 I = Vec3::UnitZ();
  double t = 0.0;

  const KGrid& grid() const { return *ftilde.grid; }
};

/// amps * prod_i exp(-(k_i - k0_i)^2 / (4 widths_i^2)); |f|^2 has standard deviation widths.
struct GaussianPacket {
  Vec3 k0;
  Vec3 widths;
  C2 amps;
};

/// alpha_sigma Y_{lambda mu}(w) g(k) with a Gaussian radial shell g centered on k0.
struct SphericalMode {
  int sigma = 1;
  int lambda = 0;
  int mu = 0;
  double k0 = 1.0;
  double shell_width = 0.1;
};

/// Narrow helicity-sigma Gaussian packet; widths default to 1% of |k0|.
struct PlaneWaveProxy {
  Vec3 k0;
  std::optional<Vec3> widths;
  int sigma = 1;

  Vec3 effective_widths() const { return widths.value_or(Vec3::Constant(0.01 * k0.norm())); }
};

using ModeSpec = std::variant<GaussianPacket, SphericalMode, PlaneWaveProxy>;

/// Throws InvalidArgument when the spec violates its own invariants.
void validate(const ModeSpec& spec);

/// Normalized intrinsic state. Throws EnvelopeClipped when more than 1e-8 of the
/// envelope's mass falls outside the grid or on masked nodes.
TwoCompState build_state(const GridPtr& grid, const ModeSpec& spec, const Vec3& I);

/// f = varpi_I ftilde, nodewise.
VectorState to_lab(const TwoCompState& s);

/// ftilde = varpi_I^T f. Throws NotTransverse if the residual exceeds 1e-8.
TwoCompState to_intrinsic(const VectorState& s, const Vec3& I);

TwoCompState evolve(const TwoCompState& s, double dt);
VectorState evolve(const VectorState& s, double dt);

Complex inner(const TwoCompState& a, const TwoCompState& b);
Complex inner(const VectorState& a, const VectorState& b);
double norm_squared(const TwoCompState& s);
double norm_squared(const VectorState& s);

/// max over usable nodes of |f^dagger k| / (|f| |k|).
double transversality_residual(const VectorState& s);

/// Y_lm(w) with the Condon-Shortley phase; Y_{l,-m} = (-1)^m conj(Y_lm).
Complex spherical_harmonic(int l, int m, const Vec3& w);

/// Unit-normalized radial shell: int_0^inf g(k)^2 k^2 dk = 1.
double radial_shell(double k, double k0, double width);

/// Fraction of the radial shell's mass inside [k_min, k_max].
double radial_shell_mass(double k0, double width, double k_min, double k_max);

}  // namespace helika
