#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "logseg/eigen_sym3.hpp"
#include "logseg/error.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace logseg;

namespace {

using oracle::characteristic_roots;

SymMat3 covariance(const std::vector<Vec3>& p, const std::vector<double>& w) {
  double sw = 0;
  Vec3 mu;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sw += w[i];
    mu += w[i] * p[i];
  }
  mu *= 1.0 / sw;
  SymMat3 c;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec3 d = p[i] - mu;
    c.xx += w[i] * d.x * d.x;
    c.xy += w[i] * d.x * d.y;
    c.xz += w[i] * d.x * d.z;
    c.yy += w[i] * d.y * d.y;
    c.yz += w[i] * d.y * d.z;
    c.zz += w[i] * d.z * d.z;
  }
  for (double* v : {&c.xx, &c.xy, &c.xz, &c.yy, &c.yz, &c.zz}) *v /= sw;
  return c;
}

}  // namespace

TEST_CASE("unit square in the xy plane") {
  const std::vector<Vec3> p{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  const auto s = weighted_covariance_shape(p, std::vector<double>(4, 1.0));
  CHECK(s.eigenvalues[2] == 0.0);
  CHECK(s.smallest_eigenvector.z == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(s.smallest_eigenvector.x) < 1e-12);
}

TEST_CASE("points on a line have rank one") {
  std::vector<Vec3> p;
  for (int i = 0; i < 10; ++i) p.push_back({0.3 * i, -0.1 * i, 0.2 * i});
  const auto s = weighted_covariance_shape(p, std::vector<double>(10, 1.0));
  CHECK(std::abs(s.eigenvalues[1]) < 1e-12);
  CHECK(std::abs(s.eigenvalues[2]) < 1e-12);
}

TEST_CASE("zero weights and tiny inputs are rejected") {
  const std::vector<Vec3> p{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  CHECK_THROWS_AS(weighted_covariance_shape(p, std::vector<double>(3, 0.0)), Error);
  CHECK_THROWS_AS(weighted_covariance_shape(std::vector<Vec3>(p.begin(), p.begin() + 2), std::vector<double>(2, 1.0)),
                  Error);
}

TEST_CASE("eigenvalues match characteristic polynomial roots") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec3> p(64);
    std::vector<double> w(64);
    const Vec3 stretch{1.0 + 3 * pos(rng), 1.0 + pos(rng), 0.2 + pos(rng)};
    for (int i = 0; i < 64; ++i) {
      p[i] = {stretch.x * u(rng), stretch.y * u(rng), stretch.z * u(rng)};
      w[i] = pos(rng);
    }
    const auto s = weighted_covariance_shape(p, w);
    const auto roots = characteristic_roots(covariance(p, w));
    for (int a = 0; a < 3; ++a) CHECK(std::abs(s.eigenvalues[a] - roots[a]) < 1e-8);
  }
}

TEST_CASE("decomposition invariants") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    SymMat3 m{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    const SymEigen3 e = eigen_decompose(m);
    CHECK(e.values[0] >= e.values[1]);
    CHECK(e.values[1] >= e.values[2]);
    CHECK(std::abs(e.values[0] + e.values[1] + e.values[2] - m.trace()) < 1e-9);
    for (int a = 0; a < 3; ++a) {
      const Vec3& v = e.vectors[a];
      CHECK(std::abs(norm(v) - 1.0) < 1e-9);
      // M v = lambda v
      const Vec3 mv{m.xx * v.x + m.xy * v.y + m.xz * v.z, m.xy * v.x + m.yy * v.y + m.yz * v.z,
                    m.xz * v.x + m.yz * v.y + m.zz * v.z};
      CHECK(norm(mv - e.values[a] * v) < 1e-9);
      const double big = std::max({std::abs(v.x), std::abs(v.y), std::abs(v.z)});
      CHECK((v.x == big || v.y == big || v.z == big));
    }
  }
}

TEST_CASE("eigenvalues are invariant to rigid rotation") {
  auto pts = logseg::testing::random_points(80, 5);
  for (auto& p : pts) p.z *= 0.1;
  const std::vector<double> w(pts.size(), 1.0);
  const auto before = weighted_covariance_shape(pts, w);
  const double c = std::cos(0.7), s = std::sin(0.7);
  std::vector<Vec3> rotated;
  for (const Vec3& p : pts) rotated.push_back({c * p.x - s * p.z, p.y, s * p.x + c * p.z});
  const auto after = weighted_covariance_shape(rotated, w);
  for (int a = 0; a < 3; ++a) CHECK(std::abs(before.eigenvalues[a] - after.eigenvalues[a]) < 1e-8);
}

TEST_CASE("small negative eigenvalues are clamped") {
  // Rank-2 PSD matrix computed with rounding noise.
  SymMat3 m{1, 1, 0, 1, 0, 0};
  const auto e = eigen_decompose(m);
  CHECK(e.values[2] >= 0.0);
  CHECK(e.values[0] == doctest::Approx(2.0));
}
