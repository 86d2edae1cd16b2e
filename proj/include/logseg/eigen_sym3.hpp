#pragma once

#include <array>
#include <span>

#include "logseg/geometry.hpp"
#include "logseg/simd/kernels.hpp"

namespace logseg {

/// Eigenvalues in [-kEigenClamp, 0) are reported as 0.
inline constexpr double kEigenClamp = 1e-9;

struct SymMat3 {
  double xx = 0.0, xy = 0.0, xz = 0.0, yy = 0.0, yz = 0.0, zz = 0.0;

  double trace() const noexcept { return xx + yy + zz; }
};

/// Eigen-decomposition of a symmetric 3x3 matrix.
/// values are sorted descending and vectors[a] pairs with values[a]; each
/// vector is unit length with its largest-magnitude component positive.
struct SymEigen3 {
  std::array<double, 3> values{};
  std::array<Vec3, 3> vectors{};
};

/// Cyclic Jacobi rotations to machine precision.
SymEigen3 eigen_decompose(const SymMat3& m) noexcept;

/// Eigenvalues (descending) and the unit normal of a weighted point set.
struct NeighborhoodShape {
  std::array<double, 3> eigenvalues{};
  Vec3 smallest_eigenvector;
};

/// Weighted mean, covariance sum_j w_j (p_j - mean)(p_j - mean)^T / sum_j w_j
/// and its eigen-decomposition. Throws AllWeightsZero or InvalidArgument
/// (fewer than 3 points, length mismatch).
NeighborhoodShape weighted_covariance_shape(std::span<const Vec3> points,
                                            std::span<const double> weights);

/// Full local frame used by the loss kernel, computed from gathered
/// structure-of-arrays buffers with the active SIMD kernels.
struct LocalFrame {
  double weight_sum = 0.0;
  Vec3 mean;
  SymMat3 covariance;
  SymEigen3 eigen;
};

/// Caller guarantees weight_sum > 0 is checked afterwards; no throwing here
/// because the loss kernel handles degenerate neighborhoods itself.
LocalFrame analyze_neighborhood(const simd::KernelTable& kernels, const double* w, const double* x,
                                const double* y, const double* z, std::size_t n) noexcept;

}  // namespace logseg
