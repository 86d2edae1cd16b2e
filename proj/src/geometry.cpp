#include "logseg/geometry.hpp"

#include <string>

#include "logseg/error.hpp"

namespace logseg {

void validate(const PointCloud& cloud) {
  if (cloud.points.empty()) throw Error(ErrorKind::InvalidArgument, "point cloud is empty");
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw Error(ErrorKind::InvalidArgument, "point " + std::to_string(i) + " is not finite");
    }
  }
  if (cloud.labels && cloud.labels->size() != cloud.points.size()) {
    throw Error(ErrorKind::LengthMismatch, "label count differs from point count");
  }
}

}  // namespace logseg
