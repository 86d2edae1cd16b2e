#include "logseg/simd/kernels.hpp"

namespace logseg::simd {
namespace {

void squared_distances(const double* x, const double* y, const double* z, std::size_t n, double qx,
                       double qy, double qz, double* out) {
  for (std::size_t j = 0; j < n; ++j) {
    const double dx = x[j] - qx;
    const double dy = y[j] - qy;
    const double dz = z[j] - qz;
    out[j] = dx * dx + dy * dy + dz * dz;
  }
}

WeightedSums weighted_sums(const double* w, const double* x, const double* y, const double* z,
                           std::size_t n) {
  WeightedSums s;
  for (std::size_t j = 0; j < n; ++j) {
    s.w += w[j];
    s.wx += w[j] * x[j];
    s.wy += w[j] * y[j];
    s.wz += w[j] * z[j];
  }
  return s;
}

WeightedMoments weighted_moments(const double* w, const double* x, const double* y, const double* z,
                                 std::size_t n, double cx, double cy, double cz) {
  WeightedMoments m;
  for (std::size_t j = 0; j < n; ++j) {
    const double dx = x[j] - cx;
    const double dy = y[j] - cy;
    const double dz = z[j] - cz;
    const double wdx = w[j] * dx;
    const double wdy = w[j] * dy;
    m.xx += wdx * dx;
    m.xy += wdx * dy;
    m.xz += wdx * dz;
    m.yy += wdy * dy;
    m.yz += wdy * dz;
    m.zz += w[j] * dz * dz;
  }
  return m;
}

void project3(const double* x, const double* y, const double* z, std::size_t n, double cx, double cy,
              double cz, const double* axes, double* q0, double* q1, double* q2) {
  for (std::size_t j = 0; j < n; ++j) {
    const double dx = x[j] - cx;
    const double dy = y[j] - cy;
    const double dz = z[j] - cz;
    q0[j] = axes[0] * dx + axes[1] * dy + axes[2] * dz;
    q1[j] = axes[3] * dx + axes[4] * dy + axes[5] * dz;
    q2[j] = axes[6] * dx + axes[7] * dy + axes[8] * dz;
  }
}

constexpr KernelTable kScalar{Backend::Scalar, &squared_distances, &weighted_sums,
                              &weighted_moments, &project3};

}  // namespace

const KernelTable& scalar_kernels() noexcept { return kScalar; }

}  // namespace logseg::simd
