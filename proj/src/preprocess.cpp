#include "logseg/preprocess.hpp"

#include <cmath>

#include "logseg/eigen_sym3.hpp"
#include "logseg/error.hpp"
#include "logseg/stats.hpp"

namespace logseg {

Vec3 rotate(const Rotation& r, const Vec3& p) noexcept {
  return {r[0] * p.x + r[1] * p.y + r[2] * p.z, r[3] * p.x + r[4] * p.y + r[5] * p.z,
          r[6] * p.x + r[7] * p.y + r[8] * p.z};
}

Vec3 rotate_transposed(const Rotation& r, const Vec3& p) noexcept {
  return {r[0] * p.x + r[3] * p.y + r[6] * p.z, r[1] * p.x + r[4] * p.y + r[7] * p.z,
          r[2] * p.x + r[5] * p.y + r[8] * p.z};
}

AlignedCloud pca_align(const PointCloud& cloud) {
  validate(cloud);
  const double n = static_cast<double>(cloud.size());
  Vec3 mean;
  for (const Vec3& p : cloud.points) mean += p;
  mean *= 1.0 / n;
  SymMat3 cov;
  std::size_t lowest = 0;
  std::size_t highest = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 d = cloud.points[i] - mean;
    cov.xx += d.x * d.x;
    cov.xy += d.x * d.y;
    cov.xz += d.x * d.z;
    cov.yy += d.y * d.y;
    cov.yz += d.y * d.z;
    cov.zz += d.z * d.z;
    if (cloud.points[i].x < cloud.points[lowest].x) lowest = i;
    if (cloud.points[i].x > cloud.points[highest].x) highest = i;
  }
  for (double* v : {&cov.xx, &cov.xy, &cov.xz, &cov.yy, &cov.yz, &cov.zz}) *v /= n;

  const SymEigen3 eig = eigen_decompose(cov);
  const double scale = std::max(eig.values[0], 0.0);
  if (!(scale > 0.0) || eig.values[1] <= 1e-12 * scale) {
    throw Error(ErrorKind::DegenerateCloud, "point cloud covariance has rank < 2");
  }

  Vec3 axis = eig.vectors[0];
  if (dot(axis, cloud.points[highest] - cloud.points[lowest]) < 0.0) axis *= -1.0;
  const Vec3 second = eig.vectors[1];
  const Vec3 third = cross(axis, second);

  AlignedCloud out;
  out.rotation = {axis.x, axis.y, axis.z, second.x, second.y, second.z, third.x, third.y, third.z};
  out.cloud = cloud;
  for (Vec3& p : out.cloud.points) p = rotate(out.rotation, p);
  return out;
}

NormalizedCloud normalize(const PointCloud& cloud, ScaleMode mode) {
  validate(cloud);
  const std::size_t n = cloud.size();
  std::vector<double> column(n);
  NormalizationRecord record;
  record.mode = mode;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t i = 0; i < n; ++i) column[i] = cloud.points[i][a];
    record.medians[a] = median(column);
  }
  const Vec3 centre{record.medians[0], record.medians[1], record.medians[2]};

  std::vector<double> radial(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = cloud.points[i] - centre;
    radial[i] = std::hypot(d.y, d.z);
    column[i] = std::abs(d.x);
  }
  // Distances from the median centre are already absolute deviations.
  record.s_r = median(radial);
  record.s_x = mode == ScaleMode::SharedRadial ? median(column) : record.s_r;
  if (!(record.s_r > 1e-12) || !(record.s_x > 1e-12)) {
    throw Error(ErrorKind::ZeroScale, "median absolute deviation is zero");
  }

  NormalizedCloud out{cloud, record};
  for (Vec3& p : out.cloud.points) {
    const Vec3 d = p - centre;
    p = {d.x / record.s_x, d.y / record.s_r, d.z / record.s_r};
  }
  return out;
}

NormalizedCloud prepare(const PointCloud& cloud, bool align, ScaleMode mode) {
  if (!align) return normalize(cloud, mode);
  const AlignedCloud aligned = pca_align(cloud);
  NormalizedCloud out = normalize(aligned.cloud, mode);
  out.record.rotation = aligned.rotation;
  return out;
}

Vec3 denormalize(const Vec3& p, const NormalizationRecord& record) noexcept {
  const Vec3 unscaled{p.x * record.s_x + record.medians[0], p.y * record.s_r + record.medians[1],
                      p.z * record.s_r + record.medians[2]};
  return rotate_transposed(record.rotation, unscaled);
}

std::vector<Vec3> denormalize(const std::vector<Vec3>& points, const NormalizationRecord& record) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const Vec3& p : points) out.push_back(denormalize(p, record));
  return out;
}

}  // namespace logseg
