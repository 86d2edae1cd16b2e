#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "logseg/geometry.hpp"

namespace logseg {

inline constexpr int kNoise = -1;

/// Density clustering in the (y, z) plane. A point is core when at least
/// min_pts points (itself included) lie within eps. Points are visited in
/// index order and clusters grow breadth-first, so labels are deterministic.
/// Labels are 0, 1, ... in discovery order, or kNoise.
std::vector<int> dbscan(std::span<const Vec2> points, double eps, int min_pts);

struct Circle {
  double centre_y = 0.0;
  double centre_z = 0.0;
  double radius = 0.0;
};

/// Algebraic least-squares circle: minimizes sum w (y^2 + z^2 + D y + E z + F)^2.
/// Throws CollinearPoints when the normal system's condition number exceeds 1e12
/// (or fewer than three points carry weight).
Circle fit_circle(std::span<const Vec2> points, std::span<const double> weights = {});

enum class ClusterChoice {
  Largest,
  HighestCoreDensity,  // most core points
};

struct BaselineConfig {
  double slice_width = 0.05;
  double eps = 0.4;
  int min_pts = 5;
  double dist_threshold = 0.1;
  ClusterChoice choice = ClusterChoice::Largest;

  /// Throws InvalidArgument for non-positive widths or thresholds.
  void validate() const;
};

struct BaselineDiagnostics {
  std::size_t slices = 0;
  std::size_t empty_slices = 0;      // no points, or every point was noise
  std::size_t degenerate_slices = 0;  // circle fit failed
  std::vector<Circle> circles;       // one per slice that produced a fit
};

struct BaselineResult {
  std::vector<bool> inlier_mask;
  BaselineDiagnostics diagnostics;
};

/// Slice, cluster, fit a circle and keep points near it. The cloud is expected
/// to be normalized. Slices that cannot be fitted contribute no inliers.
BaselineResult baseline_segment(const PointCloud& cloud, const BaselineConfig& config = {});

}  // namespace logseg
