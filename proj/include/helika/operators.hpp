#pragma once

#include <string_view>
#include <vector>

#include "helika/report.hpp"
#include "helika/states.hpp"

namespace helika {

/// Intrinsic-representation observables. Vector operators have three components.
enum class OpId {
  Momentum,           // hbar k
  CanonicalPosition,  // i grad
  PositionLab,        // i grad + A_I sigma
  BerryConnection,    // A_I sigma
  Spin,               // hbar w sigma
  Helicity,           // sigma
  OamLambda,          // -i hbar k x grad
  OamM,               // hbar (I.k)/|I x k| u_I sigma
  OamTotal,           // lambda + m
  JTotal,             // lambda + m + spin
};

/// Commutator families checked by `commutator_expect`.
enum class PairId { PositionLab, CanonicalPair, CanonicalPosition, Oam, OamSpin, J, SpinLab, Lambda, M };

std::string_view to_string(OpId op);
std::string_view to_string(PairId pair);
/// Throws InvalidArgument on unknown names.
OpId op_from_string(std::string_view name);
PairId pair_from_string(std::string_view name);
bool is_vector(OpId op);

struct BerryConnection {
  Field<Vec3> A;
  Vec3 I;
};

/// A_I at every unmasked node. Throws MaskMismatch unless the grid's mask covers I.
BerryConnection berry_potential(const Vec3& I, const GridPtr& grid);

/// Finite-difference (or spectral) curl of A, valid where the stencil is complete.
Field<Vec3> berry_curvature(const BerryConnection& conn);
Vec3 berry_curvature_closed_form(const Vec3& k);

/// Flux of the closed-form curvature through the sphere of the grid's radial node `a`.
double monopole_flux(const KGrid& shell_grid, int a);

/// One Cartesian component (axis ignored for scalars) of `op` applied to an intrinsic field.
Field<C2> apply_component(OpId op, int axis, const Field<C2>& f, const Vec3& I);
std::vector<TwoCompState> apply(OpId op, const TwoCompState& s);

/// <op> = quadrature of f^dagger (op f) over the nodes where gradients of f are valid,
/// so that <l> = <lambda> + <m> holds to rounding. The report compares the value with its real
/// part, so pass means the imaginary residual stayed within 10 tol_quad.
ObservableReport expect(OpId op, const TwoCompState& s);

/// Sum over components of <op_a op_a>, by nested application.
ObservableReport expect_square(OpId op, const TwoCompState& s);

struct Barycenter {
  Vec3 b;
  Vec3 canonical_center;
};

Barycenter barycenter(const TwoCompState& s);

/// Plane-wave limit sigma (I.k0) / (k0 |I x k0|^2) (I x k0).
Vec3 barycenter_eigenvalue(const Vec3& I, const Vec3& k0, int sigma);

/// <[A_i, B_j]> by nested application, against the pair's reference expression
/// evaluated on the same nodes.
ObservableReport commutator_expect(PairId pair, const TwoCompState& s, int i, int j);

/// max_a h_a / (spread of |ftilde|^2 along a): lattice spacing in units of the envelope
/// width. Zero on spherical grids.
double grid_resolution(const TwoCompState& s);

/// Bound for an identity that holds exactly in the continuum but involves one finite
/// difference of a product: max(10 tol_quad, C scale grid_resolution^fd_order), where
/// `scale` is the size of the factor being differentiated (e.g. <|grad phi|>).
double derivative_tolerance(const TwoCompState& s, double scale);

/// Acceptance tolerance for a commutator on this state: 10 tol_fd for the canonical
/// pairs, 10 tol_quad for the derivative-free ones, otherwise
/// max(10 tol_fd, C hbar^2 grid_resolution^fd_order) on boxes. position_lab scales
/// with <1/k^2> instead and floors at 10 tol_quad.
double commutator_tolerance(PairId pair, const TwoCompState& s);

/// Derivative-limited tolerance: max(10 tol_fd, C h^fd_order) on boxes, 10 tol_fd on spheres.
double fd_tolerance(const KGrid& grid);

/// Laboratory-representation observables acting on transverse three-vectors.
enum class LabOpId {
  Position,           // transverse projection of i grad
  IntrinsicPosition,  // Position - A_I Sigma_w
  Barycenter,         // A_I Sigma_w
  Spin,               // hbar w Sigma_w
  Helicity,           // Sigma_w
};

Field<CVec3> apply_lab(LabOpId op, int axis, const Field<CVec3>& f, const Vec3& I);
/// Expectation values, one per component (a single entry for Helicity).
std::vector<Complex> expect_lab(LabOpId op, const VectorState& s, const Vec3& I);

/// <S^2> / hbar^2 with S = hbar w Sigma_w.
double spin_squared(const VectorState& s);

/// int |k x (S f)|^2 / int hbar^2 k^2 |f|^2; vanishes because S is parallel to k.
double pryce_residual(const VectorState& s);

/// <f| d_i Sigma_w |f> per axis, with d_i Sigma_w = (Sigma_i - w_i Sigma_w) / k.
Vec3 helicity_gradient_expect(const VectorState& s);

/// max over usable nodes of |w + (I.k)/|I x k| u - (I x v)/(I.u)| / |(I x v)/(I.u)|.
double total_j_identity_residual(const KGrid& grid, const Vec3& I);

/// Nodes at least fd_order/2 rows away from every box face (all nodes on spheres).
std::vector<std::uint8_t> interior_nodes(const KGrid& grid);

}  // namespace helika
