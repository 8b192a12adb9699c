#pragma once

#include "helika/report.hpp"
#include "helika/states.hpp"

namespace helika {

/// Rotation angle phi(k) in (-pi, pi] with varpi_{I'} = varpi_I R(phi).
struct GaugeField {
  Field<double> phi;
  Vec3 I;
  Vec3 I_prime;
};

/// Throws MaskInsufficient unless the grid's mask keeps away from both singular lines.
GaugeField gauge_field(const Vec3& I, const Vec3& I_prime, const GridPtr& grid);

/// grad phi, branch-free: Im(conj(z) grad z) with z = exp(i phi).
Field<Vec3> phase_gradient(const GaugeField& gf);

/// ftilde' = exp(i sigma phi) ftilde, relabeled with I'.
TwoCompState first_class(const TwoCompState& s, const Vec3& I_prime);

/// f' = exp(-i Sigma_w phi) f, i.e. f rotated about w by +phi at every node.
VectorState second_class(const VectorState& s, const Vec3& I, const Vec3& I_prime);

/// max |A_{I'} - A_I - grad phi| over unmasked interior nodes. On boxes the bound is
/// 10 (h/rho)^p / rho, rho the closest approach of an interior node to either singular line.
ObservableReport gauge_shift_residual(const Vec3& I, const Vec3& I_prime, const GridPtr& grid);

/// Pointwise phase of f'/f, compared with -sigma phi modulo 2 pi.
struct BerryPhase {
  ObservableReport report;
  Field<double> phase;  // extracted phase; invalid where |f| is below the floor
};

BerryPhase berry_phase_extract(const VectorState& f_I, const VectorState& f_I_prime, int sigma,
                               const GaugeField& gf);

/// Wrap an angle into (-pi, pi].
double wrap_angle(double x);

}  // namespace helika
