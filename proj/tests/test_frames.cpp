#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "helika/error.hpp"
#include "helika/frames.hpp"
#include "support.hpp"

using namespace helika;

namespace {

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

}  // namespace

TEST_CASE("frame at I = e_z") {
  SUBCASE("k along x") {
    const Frame f = polarization_frame(Vec3::UnitZ(), Vec3(1, 0, 0));
    CHECK((f.v - Vec3(0, 1, 0)).norm() < 1e-15);
    CHECK((f.u - Vec3(0, 0, -1)).norm() < 1e-15);
    CHECK((f.w - Vec3(1, 0, 0)).norm() < 1e-15);
    Mat32 expect;
    expect << 0, 0, 0, 1, -1, 0;
    CHECK((quasi_unitary(f).m - expect).norm() < 1e-15);
  }
  SUBCASE("k in the xz plane") {
    const Frame f = polarization_frame(Vec3::UnitZ(), Vec3(1, 0, 1));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK((f.v - Vec3(0, 1, 0)).norm() < 1e-15);
    CHECK((f.u - Vec3(r, 0, -r)).norm() < 1e-15);
    CHECK((f.w - Vec3(r, 0, r)).norm() < 1e-15);
  }
  SUBCASE("k on the axis") {
    CHECK_THROWS_AS(polarization_frame(Vec3::UnitZ(), Vec3(0, 0, 3)), Error);
  }
}

TEST_CASE("frames agree with the hand-written triad") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const Vec3 I = random_unit(rng), k = 4.0 * random_unit(rng);
    const Frame f = polarization_frame(I, k);
    const oracle::Triad o = oracle::frame(test::v(I), test::v(k));
    CHECK(test::diff(f.u, o.u) < 1e-12);
    CHECK(test::diff(f.v, o.v) < 1e-12);
    CHECK(test::diff(f.w, o.w) < 1e-12);
    const QuasiUnitary q = quasi_unitary(f);
    CHECK((q.m.transpose() * q.m - Eigen::Matrix2d::Identity()).norm() < 1e-12);
    CHECK((q.m * q.m.transpose() + f.w * f.w.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  }
}

TEST_CASE("lab helicity matrix") {
  Mat3c expect = Mat3c::Zero();
  expect(0, 1) = -kI;
  expect(1, 0) = kI;
  CHECK((helicity_matrix_lab(Vec3::UnitZ()) - expect).norm() < 1e-15);

  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const Vec3 w = random_unit(rng);
    Eigen::SelfAdjointEigenSolver<Mat3c> es(helicity_matrix_lab(w));
    CHECK(es.eigenvalues()[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(es.eigenvalues()[1]) < 1e-12);
    CHECK(es.eigenvalues()[2] == doctest::Approx(1.0).epsilon(1e-12));

    // varpi sigma varpi^dagger reproduces Sigma_w on span{u, v}.
    const Vec3 I = random_unit(rng);
    const Frame f = polarization_frame(I, w);
    const auto q = quasi_unitary(f).m.cast<Complex>();
    const Mat3c lifted = q * pauli_sigma() * q.adjoint();
    const Mat3c proj = q * q.adjoint();
    CHECK((lifted - proj * helicity_matrix_lab(f.w) * proj).norm() < 1e-12);
  }
}

TEST_CASE("frame rotation angle") {
  CHECK(frame_rotation_angle(Vec3::UnitZ(), Vec3::UnitX(), Vec3(0, 1, 0)) ==
        doctest::Approx(oracle::pi / 2).epsilon(1e-14));
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    const Vec3 I = random_unit(rng), Ip = random_unit(rng), k = 3.0 * random_unit(rng);
    const double phi = frame_rotation_angle(I, Ip, k);
    CHECK(std::abs(frame_rotation_angle(I, I, k)) < 1e-14);
    CHECK(std::abs(std::remainder(phi + frame_rotation_angle(Ip, I, k), 2 * oracle::pi)) < 1e-12);
    CHECK(std::abs(std::remainder(phi - oracle::rotation_angle(test::v(I), test::v(Ip), test::v(k)),
                                  2 * oracle::pi)) < 1e-12);
    const Mat32 a = quasi_unitary(polarization_frame(I, k)).m;
    const Mat32 b = quasi_unitary(polarization_frame(Ip, k)).m;
    CHECK((b - a * rotation2(phi)).norm() < 1e-12);
  }
}

TEST_CASE("berry vector and rotation helper") {
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(berry_vector(Vec3::UnitZ(), Vec3(1, 0, 0)).norm() < 1e-15);
  CHECK((berry_vector(Vec3::UnitZ(), Vec3(1, 0, 1)) - Vec3(0, r, 0)).norm() < 1e-15);
  CHECK((berry_vector(Vec3::UnitZ(), Vec3(1, 0, -1)) - Vec3(0, -r, 0)).norm() < 1e-15);

  const CVec3 x = Vec3::UnitX().cast<Complex>();
  CHECK((rotate_about(Vec3::UnitZ(), oracle::pi / 2, x) - Vec3::UnitY().cast<Complex>()).norm() < 1e-15);
}
