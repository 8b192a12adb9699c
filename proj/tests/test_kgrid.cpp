#include <cmath>

#include "doctest.h"
#include "helika/kgrid.hpp"
#include "helika/states.hpp"
#include "support.hpp"

using namespace helika;

namespace {

Field<Complex> sample(const GridPtr& g, auto&& fn) {
  std::vector<Complex> v(g->size());
  for (std::size_t i = 0; i < g->size(); ++i) v[i] = fn(g->node(i));
  return Field<Complex>(g, std::move(v));
}

Field<Complex> component(const Field<CVec3>& f, int a) {
  std::vector<Complex> v(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) v[i] = f.values[i][a];
  return Field<Complex>(f.grid, std::move(v), f.valid);
}

}  // namespace

TEST_CASE("box grid masks the cone around I") {
  const auto g = build_box_grid(Vec3(0, 0, 5), Vec3::Constant(2), {16, 16, 16}, Vec3::UnitZ(), 0.1);
  CHECK(g->size() == 4096);
  std::size_t expect = 0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    const auto k = test::v(g->node(i));
    const bool near = std::acos(std::min(1.0, std::abs(k[2]) / oracle::norm(k))) < 0.1;
    expect += near;
    CHECK(g->masked(i) == near);
  }
  CHECK(expect > 0);
  CHECK(g->masked_count() == expect);
}

TEST_CASE("box grid away from the axis has no mask and integrates volume") {
  const auto g = build_box_grid(Vec3(5, 0, 0), Vec3::Constant(2), {16, 16, 16}, Vec3::UnitZ(), 0.1);
  CHECK(g->masked_count() == 0);
  double total = 0.0;
  for (double w : g->weights()) total += w;
  CHECK(total == doctest::Approx(64.0).epsilon(1e-12));
}

TEST_CASE("box grid rejects bad geometry") {
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  CHECK(code([] { build_box_grid(Vec3(0.5, 0, 0), Vec3::Ones(), {16, 16, 16}, Vec3::UnitZ(), 0.1); }) ==
        ErrorCode::BoxContainsOrigin);
  CHECK(code([] { build_box_grid(Vec3(5, 0, 0), Vec3(1, 0, 1), {16, 16, 16}, Vec3::UnitZ(), 0.1); }) ==
        ErrorCode::DegenerateAxis);
  CHECK(code([] { build_spherical_grid(6, 4, 8, 8, 8, Vec3::UnitZ(), 0.0); }) == ErrorCode::BadShellBounds);
  CHECK(code([] { build_spherical_grid(-1, 4, 8, 8, 8, Vec3::UnitZ(), 0.0); }) == ErrorCode::BadShellBounds);
}

TEST_CASE("spherical grid avoids the poles and integrates the shell volume") {
  const auto g = build_spherical_grid(4, 6, 8, 16, 32, Vec3::UnitZ(), 0.0);
  CHECK(g->size() == 4096);
  CHECK(g->masked_count() == 0);
  const Complex vol = quadrature(sample(g, [](const Vec3&) { return Complex(1.0); }));
  CHECK(vol.real() == doctest::Approx(4.0 * oracle::pi / 3.0 * (216.0 - 64.0)).epsilon(1e-6));
}

TEST_CASE("Y10 times the radial shell is normalized on the shell grid") {
  const double k0 = 5.0, w = 0.2;
  // 16 radial nodes leave a 5e-6 quadrature error on this shell; 24 resolve it.
  const auto g = build_spherical_grid(k0 - 6 * w, k0 + 6 * w, 24, 24, 48, Vec3::UnitZ(), 0.0);
  const Complex n = quadrature(sample(g, [&](const Vec3& k) {
    const double r = radial_shell(k.norm(), k0, w);
    return std::norm(oracle::ylm(1, 0, test::v(k))) * r * r;
  }));
  CHECK(std::abs(n - 1.0) < 1e-6);
}

TEST_CASE("quadrature of Gaussian moments") {
  const oracle::V k0{5, 1, -2}, w{0.5, 0.4, 0.6};
  const auto g = build_box_grid(test::e(k0), 6.0 * test::e(w), {40, 40, 40}, Vec3::UnitZ(), 0.0);
  const Complex n = quadrature(sample(g, [&](const Vec3& k) { return oracle::gaussian_density(test::v(k), k0, w); }));
  CHECK(std::abs(n - 1.0) < 1e-6);
  const Complex odd = quadrature(sample(g, [&](const Vec3& k) {
    return (k[0] - k0[0]) * oracle::gaussian_density(test::v(k), k0, w);
  }));
  CHECK(std::abs(odd) < 1e-6);
}

TEST_CASE("fourth-order gradient of a plane wave converges") {
  const Vec3 a(0.7, -0.4, 1.1);
  double err[2];
  int idx = 0;
  for (int n : {17, 33}) {
    const auto g = build_box_grid(Vec3(3, 3, 3), Vec3::Ones(), {n, n, n}, Vec3::UnitZ(), 0.0);
    const auto f = sample(g, [&](const Vec3& k) { return std::exp(kI * a.dot(k)); });
    const auto grad = gradient(f);
    double worst = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
      if (!grad.usable(i)) continue;
      const CVec3 exact = kI * a.cast<Complex>() * f.values[i];
      worst = std::max(worst, (grad.values[i] - exact).norm() / a.norm());
    }
    err[idx++] = worst;
  }
  CHECK(err[0] < 2.0 * std::pow(1.0 / 8.0, 4));
  CHECK(err[0] / err[1] > 12.0);
}

TEST_CASE("gradient of k^2 is exact") {
  const auto g = build_box_grid(Vec3(2, -1, 4), Vec3::Ones(), {12, 12, 12}, Vec3::UnitZ(), 0.0);
  const auto grad = gradient(sample(g, [](const Vec3& k) { return Complex(k.squaredNorm()); }));
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (!grad.usable(i)) continue;
    const Vec3 k = g->node(i);
    CHECK((grad.values[i] - (2.0 * k).cast<Complex>()).norm() < 1e-10);
  }
}

TEST_CASE("mixed partials of a Gaussian commute") {
  const Vec3 k0(4, 1, 2);
  const auto g = build_box_grid(k0, Vec3::Constant(3), {32, 32, 32}, Vec3::UnitZ(), 0.0);
  const auto f = sample(g, [&](const Vec3& k) { return std::exp(-(k - k0).squaredNorm() / 2.0); });
  const auto grad = gradient(f);
  const auto dxy = gradient(component(grad, 0));  // d_y d_x f in component y
  const auto dyx = gradient(component(grad, 1));
  double worst = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i)
    if (dxy.usable(i) && dyx.usable(i)) worst = std::max(worst, std::abs(dxy.values[i][1] - dyx.values[i][0]));
  CHECK(worst < 1e-3);
}

TEST_CASE("spectral gradient on the shell grid") {
  const auto g = build_spherical_grid(2, 3, 12, 16, 32, Vec3::UnitZ(), 0.0);
  const auto grad = gradient(sample(g, [](const Vec3& k) { return Complex(k[0] * k[2] + k.squaredNorm()); }));
  for (std::size_t i = 0; i < g->size(); ++i) {
    const Vec3 k = g->node(i);
    const Vec3 exact = Vec3(k[2], 0, k[0]) + 2.0 * k;
    CHECK((grad.values[i] - exact.cast<Complex>()).norm() < 1e-9);
  }
}
