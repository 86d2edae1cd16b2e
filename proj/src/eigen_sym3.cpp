#include "logseg/eigen_sym3.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "logseg/error.hpp"
#include "logseg/stats.hpp"

namespace logseg {
namespace {

void orient(Vec3& v) noexcept {
  std::size_t big = 0;
  for (std::size_t a = 1; a < 3; ++a) {
    if (std::abs(v[a]) > std::abs(v[big])) big = a;
  }
  if (v[big] < 0.0) v *= -1.0;
}

}  // namespace

SymEigen3 eigen_decompose(const SymMat3& m) noexcept {
  double a[3][3] = {{m.xx, m.xy, m.xz}, {m.xy, m.yy, m.yz}, {m.xz, m.yz, m.zz}};
  double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

  for (int sweep = 0; sweep < 64; ++sweep) {
    const double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
    if (off == 0.0) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        const double apq = a[p][q];
        if (apq == 0.0) continue;
        const double g = 100.0 * std::abs(apq);
        // Off-diagonal entry below the diagonals' precision: drop it.
        if (sweep > 3 && std::abs(a[p][p]) + g == std::abs(a[p][p]) &&
            std::abs(a[q][q]) + g == std::abs(a[q][q])) {
          a[p][q] = a[q][p] = 0.0;
          continue;
        }
        const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int r = 0; r < 3; ++r) {
          const double arp = a[r][p];
          const double arq = a[r][q];
          a[r][p] = c * arp - s * arq;
          a[r][q] = s * arp + c * arq;
        }
        for (int r = 0; r < 3; ++r) {
          const double apr = a[p][r];
          const double aqr = a[q][r];
          a[p][r] = c * apr - s * aqr;
          a[q][r] = s * apr + c * aqr;
        }
        a[p][q] = a[q][p] = 0.0;
        for (int r = 0; r < 3; ++r) {
          const double vrp = v[r][p];
          const double vrq = v[r][q];
          v[r][p] = c * vrp - s * vrq;
          v[r][q] = s * vrp + c * vrq;
        }
      }
    }
  }

  int order[3] = {0, 1, 2};
  std::sort(order, order + 3, [&](int i, int j) { return a[i][i] > a[j][j] || (a[i][i] == a[j][j] && i < j); });
  SymEigen3 out;
  for (int k = 0; k < 3; ++k) {
    const int c = order[k];
    double value = a[c][c];
    if (value < 0.0 && value >= -kEigenClamp) value = 0.0;
    out.values[static_cast<std::size_t>(k)] = value;
    Vec3 vec{v[0][c], v[1][c], v[2][c]};
    vec *= 1.0 / norm(vec);
    orient(vec);
    out.vectors[static_cast<std::size_t>(k)] = vec;
  }
  return out;
}

NeighborhoodShape weighted_covariance_shape(std::span<const Vec3> points,
                                            std::span<const double> weights) {
  if (points.size() != weights.size()) {
    throw Error(ErrorKind::LengthMismatch, "weighted_covariance_shape: lengths differ");
  }
  if (points.size() < 3) {
    throw Error(ErrorKind::InvalidArgument, "weighted_covariance_shape needs at least 3 points");
  }
  const std::size_t n = points.size();
  std::vector<double> x(n), y(n), z(n);
  for (std::size_t j = 0; j < n; ++j) {
    x[j] = points[j].x;
    y[j] = points[j].y;
    z[j] = points[j].z;
  }
  const LocalFrame frame = analyze_neighborhood(simd::active(), weights.data(), x.data(), y.data(), z.data(), n);
  if (!(frame.weight_sum > kWeightEpsilon)) {
    throw Error(ErrorKind::AllWeightsZero, "neighborhood weights sum to zero");
  }
  return {frame.eigen.values, frame.eigen.vectors[2]};
}

LocalFrame analyze_neighborhood(const simd::KernelTable& kernels, const double* w, const double* x,
                                const double* y, const double* z, std::size_t n) noexcept {
  LocalFrame f;
  const simd::WeightedSums s = kernels.weighted_sums(w, x, y, z, n);
  f.weight_sum = s.w;
  if (!(s.w > 0.0)) return f;
  f.mean = {s.wx / s.w, s.wy / s.w, s.wz / s.w};
  const simd::WeightedMoments mo = kernels.weighted_moments(w, x, y, z, n, f.mean.x, f.mean.y, f.mean.z);
  const double inv = 1.0 / s.w;
  f.covariance = {mo.xx * inv, mo.xy * inv, mo.xz * inv, mo.yy * inv, mo.yz * inv, mo.zz * inv};
  f.eigen = eigen_decompose(f.covariance);
  return f;
}

}  // namespace logseg
