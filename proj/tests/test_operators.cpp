#include "doctest.h"
#include "helika/frames.hpp"
#include "helika/operators.hpp"
#include "helika/states.hpp"
#include "support.hpp"

using namespace helika;

namespace {

Vec3 re(const ObservableReport& r) { return Vec3(r.value[0].real(), r.value[1].real(), r.value[2].real()); }

TwoCompState packet(const Vec3& k0, double w, const C2& amps, int n = 24, const Vec3& I = Vec3::UnitZ()) {
  const auto g = build_box_grid(k0, Vec3::Constant(6 * w), {n, n, n}, I, 0.05);
  return build_state(g, GaussianPacket{k0, Vec3::Constant(w), amps}, I);
}

}  // namespace

TEST_CASE("Berry potential at hand-evaluated points") {
  const auto g = build_box_grid(Vec3(1, 0, 0), Vec3(0.5, 0.5, 1.0), {9, 9, 9}, Vec3::UnitZ(), 0.05);
  const auto conn = berry_potential(Vec3::UnitZ(), g);
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (g->masked(i)) continue;
    const auto k = test::v(g->node(i));
    CHECK(test::diff(conn.A.values[i], oracle::berry_potential({0, 0, 1}, k)) < 1e-13);
  }
  // k = (1, 0, 1) and (1, 0, -1) are lattice nodes.
  CHECK((conn.A.values[g->index(4, 4, 8)] - Vec3(0, 1 / std::sqrt(2.0), 0)).norm() < 1e-15);
  CHECK((conn.A.values[g->index(4, 4, 0)] - Vec3(0, -1 / std::sqrt(2.0), 0)).norm() < 1e-15);
  CHECK(conn.A.values[g->index(4, 4, 4)].norm() < 1e-15);
}

TEST_CASE("curvature closed form and numeric curl") {
  CHECK(test::diff(berry_curvature_closed_form(Vec3(1, 0, 1)), oracle::curvature({1, 0, 1})) < 1e-15);
  const auto g = build_box_grid(Vec3(3, 3, 3), Vec3::Ones(), {33, 33, 33}, Vec3::UnitZ(), 0.05);
  const auto H = berry_curvature(berry_potential(Vec3::UnitZ(), g));
  const double h = g->max_spacing();
  double worst = 0.0, transverse = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (!H.usable(i)) continue;
    const Vec3 k = g->node(i);
    worst = std::max(worst, test::diff(H.values[i], oracle::curvature(test::v(k))));
    const Vec3 w = k.normalized();
    transverse = std::max(transverse, (H.values[i] - H.values[i].dot(w) * w).norm());
  }
  CHECK(worst < 2.0 * std::pow(h, 4));
  CHECK(transverse < fd_tolerance(*g));
}

TEST_CASE("monopole flux through spheres of any radius") {
  for (double r : {0.5, 2.0, 7.0}) {
    const auto g = build_spherical_grid(r, r * 1.1, 2, 16, 32, Vec3::UnitZ(), 0.0);
    CHECK(monopole_flux(*g, 0) == doctest::Approx(-4 * oracle::pi).epsilon(1e-10));
  }
}

TEST_CASE("oam_m at a hand-evaluated node") {
  const auto s = packet(Vec3(1, 0, 1), 0.1, alpha(1), 25);
  const auto& g = s.grid();
  const std::size_t mid = g.index(12, 12, 12);
  REQUIRE((g.node(mid) - Vec3(1, 0, 1)).norm() < 1e-14);
  // (I.k)/|I x k| = 1 at k = (1, 0, 1); u_I = (1, 0, -1)/sqrt 2; sigma alpha_+ = alpha_+.
  const Vec3 u = Vec3(1, 0, -1) / std::sqrt(2.0);
  for (int a = 0; a < 3; ++a) {
    const auto m = apply_component(OpId::OamM, a, s.ftilde, s.I);
    CHECK((m.values[mid] - u[a] * s.ftilde.values[mid]).norm() < 1e-14);
  }
}

TEST_CASE("expectations on helicity eigenpackets") {
  const auto plus = packet(Vec3(5, 0, 0), 0.3, alpha(1));
  const auto minus = packet(Vec3(5, 0, 0), 0.3, alpha(-1));
  CHECK(expect(OpId::Helicity, plus).value[0].real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(expect(OpId::Helicity, minus).value[0].real() == doctest::Approx(-1.0).epsilon(1e-12));

  // Spin points along <w>; momentum along k0 up to O(w^2 / k0) corrections.
  const Vec3 S = re(expect(OpId::Spin, plus));
  CHECK((S - Vec3(1, 0, 0)).norm() < 1e-2);
  CHECK((re(expect(OpId::Momentum, plus)) - Vec3(5, 0, 0)).norm() < 1e-6);

  // Spin components equal the quadrature of w |f+|^2 - w |f-|^2 built by hand.
  const auto& g = plus.grid();
  Vec3 hand = Vec3::Zero();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.masked(i)) continue;
    const C2& f = plus.ftilde.values[i];
    const double h = (std::conj(f[0]) * (-kI * f[1]) + std::conj(f[1]) * (kI * f[0])).real();
    hand += g.weight(i) * h * g.node(i).normalized();
  }
  CHECK((S - hand).norm() < 1e-10);
}

TEST_CASE("apply helicity on an eigenpacket returns the state") {
  const auto s = packet(Vec3(2, 3, 4), 0.3, alpha(1), 16);
  const auto out = apply(OpId::Helicity, s);
  REQUIRE(out.size() == 1);
  double m = 0.0;
  for (std::size_t i = 0; i < s.ftilde.size(); ++i)
    m = std::max(m, (out[0].ftilde.values[i] - s.ftilde.values[i]).norm());
  CHECK(m < 1e-15);
}

TEST_CASE("spherical eigenvalues for lambda = 2, mu = 1") {
  const double k0 = 5.0, w = 0.2;
  const auto g = build_spherical_grid(k0 - 6 * w, k0 + 6 * w, 16, 24, 48, Vec3::UnitZ(), 0.0);
  const auto s = build_state(g, SphericalMode{1, 2, 1, k0, w}, Vec3::UnitZ());
  CHECK(expect(OpId::OamLambda, s).value[2].real() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(expect_square(OpId::OamLambda, s).value[0].real() == doctest::Approx(6.0).epsilon(1e-3));
}

TEST_CASE("barycenter on the equator of I vanishes") {
  for (int sigma : {1, -1}) {
    const auto s = packet(Vec3(5, 0, 0), 0.3, alpha(sigma));
    CHECK(barycenter(s).b.norm() < 1e-10);
  }
  CHECK(test::diff(barycenter_eigenvalue(Vec3::UnitZ(), Vec3(3, 0, 4), -1),
                   oracle::barycenter({0, 0, 1}, {3, 0, 4}, -1)) < 1e-15);
}

TEST_CASE("commutators") {
  const auto s = packet(Vec3(5, 0, 0), 0.5, alpha(1), 32);
  SUBCASE("canonical pair") {
    const auto r = commutator_expect(PairId::CanonicalPair, s, 0, 0);
    CHECK(r.pass);
    CHECK(std::abs(r.value[0] - kI) < 10 * s.grid().config().tol_fd);
  }
  SUBCASE("lab position against i eps <H sigma> built by hand") {
    const auto r = commutator_expect(PairId::PositionLab, s, 0, 1);
    const auto& g = s.grid();
    Complex hand = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.masked(i)) continue;
      const C2& f = s.ftilde.values[i];
      const Complex sig = std::conj(f[0]) * (-kI * f[1]) + std::conj(f[1]) * (kI * f[0]);
      hand += g.weight(i) * oracle::curvature(test::v(g.node(i)))[2] * sig;
    }
    CHECK(r.pass);
    CHECK(std::abs(r.value[0] - kI * hand) < r.tolerance);
  }
  SUBCASE("lab spin components commute") {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const auto r = commutator_expect(PairId::SpinLab, s, i, j);
        CHECK(r.pass);
        CHECK(std::abs(r.value[0]) < 1e-10);
      }
  }
}

TEST_CASE("operator names") {
  CHECK(op_from_string("helicity") == OpId::Helicity);
  CHECK(op_from_string(to_string(OpId::OamM)) == OpId::OamM);
  CHECK(pair_from_string(to_string(PairId::J)) == PairId::J);
  CHECK_THROWS_AS(op_from_string("nonsense"), Error);
}

TEST_CASE("lab spin algebra on a linear packet") {
  const auto s = packet(Vec3(3, -2, 4), 0.4, C2(0.6, 0.8), 20);
  const auto lab = to_lab(s);
  CHECK(spin_squared(lab) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(pryce_residual(lab) < 1e-20);
  CHECK(helicity_gradient_expect(lab).norm() < 1e-10);
}
