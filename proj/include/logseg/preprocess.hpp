#pragma once

#include <array>
#include <vector>

#include "logseg/geometry.hpp"

namespace logseg {

/// Row-major 3x3 rotation.
using Rotation = std::array<double, 9>;

inline constexpr Rotation kIdentityRotation = {1, 0, 0, 0, 1, 0, 0, 0, 1};

Vec3 rotate(const Rotation& r, const Vec3& p) noexcept;
Vec3 rotate_transposed(const Rotation& r, const Vec3& p) noexcept;

struct AlignedCloud {
  PointCloud cloud;
  Rotation rotation = kIdentityRotation;  // aligned = rotation * original
};

/// Rotates the cloud so its direction of largest variance becomes +x. The
/// rotation is estimated on the mean-centred cloud but applied about the
/// origin (translation is left to normalize()). The axis is oriented so the
/// original lowest-x point lands at lower x than the original highest-x point,
/// and det(rotation) = +1. Throws DegenerateCloud when the covariance has rank < 2.
AlignedCloud pca_align(const PointCloud& cloud);

enum class ScaleMode {
  /// y and z share the radial scale, x has its own.
  SharedRadial,
  /// One radial scale for all three axes.
  SingleGlobal,
};

/// Everything needed to map normalized coordinates back to the input frame:
/// normalized = (rotation * p - medians) / (s_x, s_r, s_r).
struct NormalizationRecord {
  std::array<double, 3> medians{};
  double s_r = 1.0;
  double s_x = 1.0;
  Rotation rotation = kIdentityRotation;
  ScaleMode mode = ScaleMode::SharedRadial;

  Vec3 scales() const noexcept { return {s_x, s_r, s_r}; }
};

struct NormalizedCloud {
  PointCloud cloud;
  NormalizationRecord record;
};

/// Median-centres every coordinate, divides y and z by the median distance of
/// the centred points from the x axis and x by the median of |x|. Both scales
/// are median absolute deviations of the centred data. Throws ZeroScale when
/// either scale is <= 1e-12.
NormalizedCloud normalize(const PointCloud& cloud, ScaleMode mode = ScaleMode::SharedRadial);

/// normalize() after pca_align(), with the rotation kept in the record.
NormalizedCloud prepare(const PointCloud& cloud, bool align, ScaleMode mode = ScaleMode::SharedRadial);

Vec3 denormalize(const Vec3& p, const NormalizationRecord& record) noexcept;
std::vector<Vec3> denormalize(const std::vector<Vec3>& points, const NormalizationRecord& record);

}  // namespace logseg
