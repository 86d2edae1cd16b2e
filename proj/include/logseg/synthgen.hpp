#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "logseg/geometry.hpp"
#include "logseg/polyfit.hpp"

namespace logseg {

/// Uniform points in the surface bounding box inflated by `inflation` times
/// the base radius, kept only when at least `min_radius_factor` local radii
/// away from the centreline.
struct AmbientOutliers {
  double fraction = 0.2;  // share of surface + these outliers
  double inflation = 1.5;
  double min_radius_factor = 1.5;
};

/// Periodic clusters under the log, like the rails of a transfer conveyor.
/// Cluster j sits at x = j * period, starting `offset` below the bottom of the
/// log and extending `extent` further down.
struct RailingOutliers {
  double period = 0.5;
  double offset = 0.05;
  std::size_t cluster_size = 40;
  double extent = 0.1;
  double half_width = 0.02;  // spread in x and y around the cluster centre
};

/// Points just outside the surface, at radius r(x, theta) * (1 + delta).
struct NearSurfaceOutliers {
  double fraction = 0.05;  // counted like the ambient fraction
  double delta = 0.05;
};

struct SyntheticLogSpec {
  std::string id = "synthetic";
  std::size_t n_surface = 5000;
  double length = 4.0;
  double base_radius = 0.15;
  double taper_rate = 0.0;  // radius lost per unit length
  /// Centreline offsets y(x) = c0 + c1 x + c2 x^2 (same for z).
  std::array<double, 3> centreline_y{};
  std::array<double, 3> centreline_z{};
  double ellipticity = 1.0;  // major / minor axis of the cross-section, >= 1
  double roughness_amp = 0.0;
  std::size_t bump_count = 0;
  double bump_amp = 0.0;
  double bump_width = 0.05;
  double angular_coverage_deg = 360.0;  // centred on +z (the scanner side)
  std::vector<AmbientOutliers> ambient;
  std::vector<RailingOutliers> railing;
  std::vector<NearSurfaceOutliers> near_surface;
  std::uint64_t seed = 0;

  /// Throws InvalidSpec when an invariant is violated.
  void validate() const;
  double radius_at(double x) const noexcept { return base_radius - taper_rate * x; }
};

struct SyntheticLog {
  /// Surface points first (labels true), outliers after (labels false).
  PointCloud cloud;
  /// Ground-truth centreline as a degree-2 curve.
  CurveFit centreline;
  /// Angle of every point around the centreline, NaN for outliers.
  std::vector<double> theta;
};

/// Area-normalized ellipse radius factor at angle theta: a*b / hypot(b cos, a sin)
/// with a / b = ellipticity and a * b = 1.
double ellipse_factor(double theta, double ellipticity) noexcept;

/// Deterministic in spec (including seed).
SyntheticLog generate(const SyntheticLogSpec& spec);

enum class OutlierKind { None, Ambient, Railing, NearSurface };
const char* to_string(OutlierKind kind) noexcept;

struct SuiteEntry {
  SyntheticLogSpec spec;
  OutlierKind outliers = OutlierKind::None;
  bool tapered = false;
  bool curved = false;
};

/// The 20-cloud benchmark: taper {0, 0.1}, ellipticity {1.0, 1.3}, centreline
/// {straight, quadratic} and outliers {none, ambient 20%, railing, near-surface 5%},
/// with seeds 0..19.
std::vector<SuiteEntry> default_suite(std::size_t n_surface = 5000);

}  // namespace logseg
