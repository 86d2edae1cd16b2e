#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "logseg/eigen_sym3.hpp"
#include "logseg/error.hpp"
#include "logseg/knn.hpp"
#include "logseg/loss.hpp"
#include "logseg/polyfit.hpp"
#include "logseg/stats.hpp"
#include "test_support.hpp"

using namespace logseg;
using logseg::testing::cloud_of;
using logseg::testing::noisy_cylinder;
using logseg::testing::random_state;

namespace {

SegmentationState state_with(std::vector<double> logits, std::vector<Vec2> rho) {
  return {std::move(logits), std::move(rho)};
}

// Independent recomputation of every term from the definitions, reusing only
// the regression and covariance primitives that have their own oracle tests.
struct Reference {
  const PointCloud& cloud;
  const std::vector<double>& w;
  const std::vector<Vec2>& rho;

  double wsum() const { return std::accumulate(w.begin(), w.end(), 0.0); }

  double fit(int degree) const {
    std::vector<double> xs;
    std::vector<Vec2> c;
    for (std::size_t i = 0; i < w.size(); ++i) {
      xs.push_back(cloud.points[i].x);
      c.push_back({cloud.points[i].y + rho[i].y, cloud.points[i].z + rho[i].z});
    }
    const CurveFit f = fit_weighted_polynomial(xs, c, w, degree);
    double s = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const Vec2 h = f(xs[i]);
      s += w[i] * std::hypot(c[i].y - h.y, c[i].z - h.z);
    }
    return s / wsum();
  }

  double distance() const {
    double s = 0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * norm(rho[i]);
    return s / wsum();
  }

  double deviation() const {
    std::vector<double> xs;
    std::vector<Vec2> a;
    for (std::size_t i = 0; i < w.size(); ++i) {
      xs.push_back(cloud.points[i].x);
      a.push_back({norm(rho[i]), 0.0});
    }
    const CurveFit f = fit_weighted_polynomial(xs, a, w, 1);
    double s = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double r = a[i].y - f(xs[i]).y;
      s += w[i] * r * r;
    }
    return s / wsum();
  }

  NeighborhoodShape shape(const Neighborhoods& nb, std::size_t i) const {
    std::vector<Vec3> p{cloud.points[i]};
    std::vector<double> ww{w[i]};
    for (std::uint32_t j : nb.of(i)) {
      p.push_back(cloud.points[j]);
      ww.push_back(w[j]);
    }
    return weighted_covariance_shape(p, ww);
  }

  double plane(const Neighborhoods& nb) const {
    double s = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const auto l = shape(nb, i).eigenvalues;
      s += w[i] * (1.0 - l[1] / l[0] + l[2] / l[1]);
    }
    return s / wsum();
  }

  double normal(const Neighborhoods& nb) const {
    double s = 0, sw = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const Vec3 r{0, rho[i].y, rho[i].z};
      if (norm(r) <= kRhoEpsilon) continue;
      const Vec3 v = shape(nb, i).smallest_eigenvector;
      s += w[i] * (1.0 - std::abs(dot(r, v)) / norm(r));
      sw += w[i];
    }
    return s / sw;
  }

  double weights() const { return 1.0 - std::accumulate(w.begin(), w.end(), 0.0) / double(w.size()); }
};

}  // namespace

TEST_CASE("centreline points add rho in the cross-section") {
  const PointCloud c = cloud_of({{1, 2, 3}, {4, 5, 6}});
  const auto pts = centreline_points(c, state_with({0, 0}, {{-2, -3}, {0, 0}}));
  CHECK(pts[0] == Vec3{1, 0, 0});
  CHECK(pts[1] == Vec3{4, 5, 6});
  const PointCloud r = noisy_cylinder(50, 2);
  const auto s = random_state(50, 3);
  const auto cp = centreline_points(r, s);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(cp[i].x == r.points[i].x);
    CHECK(cp[i].y - r.points[i].y == doctest::Approx(s.rho[i].y).epsilon(1e-14));
  }
}

TEST_CASE("fit loss examples") {
  PointCloud c;
  std::vector<Vec2> rho;
  for (int i = 0; i < 10; ++i) {
    c.points.push_back({double(i), 0.1 * i + 1.0, 2.0});
    rho.push_back({-1.0, -2.0});
  }
  CHECK(fit_loss(c, std::vector<double>(10, 0.7), rho, 1) < 1e-10);

  PointCloud two;
  std::vector<Vec2> zero(6);
  for (int i = 0; i < 6; ++i) two.points.push_back({double(i), i % 2 ? 1.0 : -1.0, 0.0});
  CHECK(fit_loss(two, std::vector<double>(6, 1.0), zero, 0) == doctest::Approx(1.0));
}

TEST_CASE("distance loss examples") {
  CHECK(distance_loss(std::vector<double>{0.2, 0.9}, std::vector<Vec2>(2)) == 0.0);
  const std::vector<Vec2> unit{{1, 0}, {0, 1}, {0.6, 0.8}};
  CHECK(distance_loss(std::vector<double>{0.1, 0.5, 0.9}, unit) == doctest::Approx(1.0));
}

TEST_CASE("deviation loss examples") {
  PointCloud cyl, cone;
  std::vector<Vec2> rc, rk;
  for (int i = 0; i < 40; ++i) {
    const double x = 0.1 * i, t = 0.37 * i;
    cyl.points.push_back({x, 0, 0});
    cone.points.push_back({x, 0, 0});
    rc.push_back({0.8 * std::cos(t), 0.8 * std::sin(t)});
    const double r = 1.0 - 0.1 * x;
    rk.push_back({r * std::cos(t), r * std::sin(t)});
  }
  const std::vector<double> w(40, 0.6);
  CHECK(deviation_loss(cyl, w, rc) < 1e-12);
  CHECK(deviation_loss(cone, w, rk) < 1e-10);

  // |rho| alternating r +- d as (+, -, -, +) blocks on evenly spaced x, so the
  // fitted line is exactly flat at r and every squared residual is d^2.
  PointCloud alt;
  std::vector<Vec2> ra;
  for (int i = 0; i < 20; ++i) {
    alt.points.push_back({double(i), 0, 0});
    const bool up = i % 4 == 0 || i % 4 == 3;
    ra.push_back({1.0 + (up ? 0.1 : -0.1), 0.0});
  }
  CHECK(std::abs(deviation_loss(alt, std::vector<double>(20, 1.0), ra) - 0.01) < 1e-10);
}

TEST_CASE("plane term arithmetic") {
  CHECK(plane_term({1, 1, 0}) == 0.0);
  CHECK(plane_term({1, 1, 1}) == 1.0);
  CHECK(plane_term({4, 2, 1}) == 1.0);
  CHECK(plane_term({1, 0, 0}) == 1.0);
  CHECK(plane_term({0, 0, 0}) == 1.0);
}

TEST_CASE("normal loss examples on a plane") {
  // Planar grid in z = 0: every v3 is +z.
  PointCloud grid;
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) grid.points.push_back({double(a), double(b), 0.0});
  const auto nb = build_neighborhoods(grid, 6);
  const std::size_t n = grid.size();
  const std::vector<double> w(n, 0.8);
  CHECK(normal_loss(grid, w, std::vector<Vec2>(n, Vec2{0, 2}), nb) < 1e-12);
  CHECK(normal_loss(grid, w, std::vector<Vec2>(n, Vec2{3, 0}), nb) == doctest::Approx(1.0));
  const double s60 = std::sin(M_PI / 3), c60 = std::cos(M_PI / 3);
  CHECK(normal_loss(grid, w, std::vector<Vec2>(n, Vec2{s60, c60}), nb) == doctest::Approx(0.5));
}

TEST_CASE("normal loss skips vanishing centreline vectors") {
  PointCloud grid;
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) grid.points.push_back({double(a), double(b), 0.0});
  const auto nb = build_neighborhoods(grid, 5);
  std::vector<Vec2> rho(grid.size(), Vec2{0, 1});
  for (std::size_t i = 0; i < rho.size(); i += 2) rho[i] = {0, 0};
  CHECK(normal_loss(grid, std::vector<double>(grid.size(), 1.0), rho, nb) < 1e-12);
  CHECK(normal_loss(grid, std::vector<double>(grid.size(), 1.0), std::vector<Vec2>(grid.size()), nb) == 0.0);
}

TEST_CASE("weights loss examples") {
  CHECK(weights_loss(std::vector<double>{1, 1, 1}) == 0.0);
  CHECK(weights_loss(state_with({0, 0, 0, 0}, std::vector<Vec2>(4))) == doctest::Approx(0.5));
  CHECK(weights_loss(state_with({30, 30}, std::vector<Vec2>(2))) < 1e-12);
  const std::vector<double> logits{-1.5, 0.3, 2.2, 4.0};
  double mean = 0;
  for (double l : logits) mean += sigmoid(l) / 4;
  CHECK(weights_loss(state_with(logits, std::vector<Vec2>(4))) == doctest::Approx(1.0 - mean).epsilon(1e-15));
}

TEST_CASE("every term matches an independent recomputation") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PointCloud cloud = noisy_cylinder(150, seed, 0.1);
    const SegmentationState s = random_state(150, seed + 100);
    const std::vector<double> w = s.weights();
    const auto nb = build_neighborhoods(cloud, 12);
    const Reference ref{cloud, w, s.rho};
    const LossBreakdown b = total_loss(cloud, s, nb, LossWeights{}, 2);
    CHECK(b.fit == doctest::Approx(ref.fit(2)).epsilon(1e-10));
    CHECK(b.rho == doctest::Approx(ref.distance()).epsilon(1e-12));
    CHECK(b.sigma == doctest::Approx(ref.deviation()).epsilon(1e-10));
    CHECK(b.plane == doctest::Approx(ref.plane(nb)).epsilon(1e-10));
    CHECK(b.normal == doctest::Approx(ref.normal(nb)).epsilon(1e-10));
    CHECK(b.weights == doctest::Approx(ref.weights()).epsilon(1e-14));
    CHECK(fit_loss(cloud, s, 2) == doctest::Approx(b.fit).epsilon(1e-14));
    CHECK(plane_loss(cloud, s, nb) == doctest::Approx(b.plane).epsilon(1e-14));
  }
}

TEST_CASE("total is the coefficient-weighted sum of the terms") {
  const PointCloud cloud = noisy_cylinder(120, 7);
  const auto nb = build_neighborhoods(cloud, 10);
  const SegmentationState s = random_state(120, 8);
  const LossWeights lambda{0.3, 0.05, 0.7, 0.2, 0.4, 0.11};
  const LossBreakdown b = total_loss(cloud, s, nb, lambda, 1);
  double sum = 0;
  for (Term t : kAllTerms) sum += lambda[t] * b[t];
  CHECK(std::abs(b.total - sum) < 1e-12);
  CHECK(total_loss(cloud, s, nb, LossWeights::zero(), 1).total == 0.0);
}

TEST_CASE("default coefficients sum to one") {
  const LossWeights d;
  LossBreakdown ones;
  double total = 0;
  for (Term t : kAllTerms) {
    ones[t] = 1.0;
    total += d[t] * ones[t];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(d.fit == 0.26);
  CHECK(d.rho == 0.12);
  CHECK(d.sigma == 0.18);
  CHECK(d.plane == 0.12);
  CHECK(d.normal == 0.09);
  CHECK(d.weights == 0.23);
}

TEST_CASE("zeroing a coefficient removes the term") {
  const PointCloud cloud = noisy_cylinder(100, 4);
  const auto nb = build_neighborhoods(cloud, 10);
  const SegmentationState s = random_state(100, 5);
  const LossBreakdown full = total_loss(cloud, s, nb, LossWeights{}, 1);
  for (Term off : {Term::Deviation, Term::Plane, Term::Normal}) {
    LossWeights lambda;
    lambda[off] = 0.0;
    double expect = 0;
    for (Term t : kAllTerms) {
      if (t != off) expect += lambda[t] * full[t];
    }
    CHECK(std::abs(total_loss(cloud, s, nb, lambda, 1).total - expect) < 1e-12);
  }
}

TEST_CASE("scale equivariance") {
  const PointCloud cloud = noisy_cylinder(120, 11, 0.1);
  const auto nb = build_neighborhoods(cloud, 12);
  const SegmentationState s = random_state(120, 12);
  for (double c : {0.25, 3.0}) {
    PointCloud scaled = cloud;
    SegmentationState ss = s;
    for (auto& p : scaled.points) p *= c;
    for (auto& r : ss.rho) r = {c * r.y, c * r.z};
    const LossBreakdown a = total_loss(cloud, s, nb, LossWeights{}, 1);
    const LossBreakdown b = total_loss(scaled, ss, nb, LossWeights{}, 1);
    CHECK(b.fit == doctest::Approx(c * a.fit).epsilon(1e-9));
    CHECK(b.rho == doctest::Approx(c * a.rho).epsilon(1e-9));
    CHECK(b.sigma == doctest::Approx(c * c * a.sigma).epsilon(1e-9));
    CHECK(std::abs(b.plane - a.plane) < 1e-9);
    CHECK(std::abs(b.normal - a.normal) < 1e-9);
    CHECK(std::abs(b.weights - a.weights) < 1e-9);
  }
}

TEST_CASE("term bounds on random states") {
  for (std::uint64_t seed = 20; seed < 30; ++seed) {
    const PointCloud cloud = noisy_cylinder(80, seed, 0.3);
    const auto nb = build_neighborhoods(cloud, 8);
    const LossBreakdown b = total_loss(cloud, random_state(80, seed), nb, LossWeights{}, 1);
    CHECK(b.fit >= 0.0);
    CHECK(b.rho >= 0.0);
    CHECK(b.sigma >= 0.0);
    CHECK((b.plane >= 0.0 && b.plane <= 2.0));
    CHECK((b.normal >= 0.0 && b.normal <= 1.0));
    CHECK((b.weights >= 0.0 && b.weights <= 1.0));
  }
}

TEST_CASE("weighted-mean terms ignore a uniform rescale of the weights") {
  const PointCloud cloud = noisy_cylinder(90, 31, 0.1);
  const auto nb = build_neighborhoods(cloud, 9);
  const SegmentationState s = random_state(90, 32);
  std::vector<double> w = s.weights(), w2 = w;
  for (double& v : w2) v *= 0.37;
  CHECK(fit_loss(cloud, w, s.rho, 1) == doctest::Approx(fit_loss(cloud, w2, s.rho, 1)).epsilon(1e-12));
  CHECK(distance_loss(w, s.rho) == doctest::Approx(distance_loss(w2, s.rho)).epsilon(1e-12));
  CHECK(deviation_loss(cloud, w, s.rho) == doctest::Approx(deviation_loss(cloud, w2, s.rho)).epsilon(1e-12));
  CHECK(plane_loss(cloud, w, nb) == doctest::Approx(plane_loss(cloud, w2, nb)).epsilon(1e-12));
  CHECK(normal_loss(cloud, w, s.rho, nb) == doctest::Approx(normal_loss(cloud, w2, s.rho, nb)).epsilon(1e-12));
  CHECK(weights_loss(w) != doctest::Approx(weights_loss(w2)));
}

TEST_CASE("exact cone with exact axis vectors has near-zero structural loss") {
  // Staggered (x, theta) grid on a cone of taper 0.1.
  PointCloud cone;
  std::vector<Vec2> rho;
  const int nx = 100, nt = 50;
  for (int a = 0; a < nx; ++a) {
    for (int b = 0; b < nt; ++b) {
      const double x = 4.0 * (a + 0.5) / nx, t = 2 * M_PI * (b + 0.5 * (a % 2)) / nt;
      const double r = 1.5 - 0.1 * x;
      cone.points.push_back({x, r * std::cos(t), r * std::sin(t)});
      rho.push_back({-r * std::cos(t), -r * std::sin(t)});
    }
  }
  const auto nb = build_neighborhoods(cone, 64);
  const SegmentationState s{std::vector<double>(cone.size(), 10.0), rho};
  const LossBreakdown b = total_loss(cone, s, nb, LossWeights{}, 1);
  CHECK(b.fit < 1e-8);
  CHECK(b.sigma < 1e-10);
  CHECK(b.weights < 1e-4);
  // rho is perpendicular to the axis while the surface normal leans by
  // atan(taper), so the normal term cannot drop below 1 - cos(atan(0.1)).
  const double floor = 1.0 - 1.0 / std::sqrt(1.01);
  CHECK(b.normal > floor - 1e-6);
  CHECK(b.normal < floor + 1e-3);
}

TEST_CASE("closed-form gradients") {
  const PointCloud cloud = noisy_cylinder(30, 1);
  const auto nb = build_neighborhoods(cloud, 6);
  const SegmentationState s = random_state(30, 2);
  const LossGradient g = total_loss_gradient(cloud, s, nb, LossWeights::only(Term::Weights), 1);
  for (std::size_t i = 0; i < 30; ++i) {
    const double w = sigmoid(s.logits[i]);
    CHECK(g.logits[i] == doctest::Approx(-w * (1 - w) / 30.0).epsilon(1e-14));
    CHECK(g.rho[i] == Vec2{0, 0});
  }

  // Distance term in weight space: d/d rho_i = w_i rho_i / |rho_i| / sum w.
  const std::vector<double> w{0.5, 0.5, 0.5};
  const std::vector<Vec2> rho{{3, 4}, {1, 0}, {0, 2}};
  const PointCloud tiny = cloud_of({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
  const LossModel model(tiny, nullptr, 1);
  WeightGradient wg;
  LossModel::Options only_active;
  only_active.all_terms = false;
  model.evaluate(w, rho, LossWeights::only(Term::Distance), only_active, &wg);
  CHECK(wg.rho[0].y == doctest::Approx(0.6 * 0.5 / 1.5));
  CHECK(wg.rho[0].z == doctest::Approx(0.8 * 0.5 / 1.5));
}

TEST_CASE("degenerate weights are reported") {
  const PointCloud cloud = noisy_cylinder(20, 1);
  const LossModel model(cloud, nullptr, 1);
  try {
    model.evaluate(std::vector<double>(20, 0.0), std::vector<Vec2>(20), LossWeights::only(Term::Fit),
                   LossModel::Options{});
    FAIL("expected AllWeightsZero");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::AllWeightsZero);
  }
  CHECK_THROWS_AS(LossWeights({-1, 0, 0, 0, 0, 0}).validate(), Error);
}
