#pragma once

// Shared helpers for the test binaries: seeded random clouds and states.

#include <cmath>
#include <random>
#include <vector>

#include "logseg/geometry.hpp"
#include "logseg/loss.hpp"

namespace logseg::testing {

inline std::vector<Vec3> random_points(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Vec3> out(n);
  for (auto& p : out) p = {u(rng), u(rng), u(rng)};
  return out;
}

inline PointCloud cloud_of(std::vector<Vec3> points) {
  PointCloud c;
  c.id = "test";
  c.points = std::move(points);
  return c;
}

/// Noisy cylinder of unit radius along x in [-2, 2].
inline PointCloud noisy_cylinder(std::size_t n, std::uint64_t seed, double noise = 0.02) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = -2.0 + 4.0 * u(rng);
    const double t = 2.0 * M_PI * u(rng);
    const double r = 1.0 + noise * (2.0 * u(rng) - 1.0);
    c.points.push_back({x, r * std::cos(t), r * std::sin(t)});
  }
  return c;
}

inline SegmentationState random_state(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SegmentationState s;
  s.logits.resize(n);
  s.rho.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.logits[i] = 2.0 * u(rng);
    s.rho[i] = {u(rng), u(rng)};
  }
  return s;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace logseg::testing
