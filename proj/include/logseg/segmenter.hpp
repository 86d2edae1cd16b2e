#pragma once

#include <cstdint>
#include <vector>

#include "logseg/geometry.hpp"
#include "logseg/loss.hpp"
#include "logseg/polyfit.hpp"

namespace logseg {

struct OptimizerConfig {
  double learning_rate = 0.05;
  int max_steps = 500;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int convergence_window = 20;
  double convergence_tol = 1e-6;
  double subsample_fraction = 2.0 / 3.0;
  int batches_along_x = 4;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  int degree = 1;
  /// Neighborhood size for the plane and normal terms; clamped to n - 1.
  int k = 256;

  /// Throws InvalidArgument for out-of-range fields.
  void validate() const;
};

struct SegmentationResult {
  std::vector<bool> inlier_mask;
  std::vector<double> final_weights;
  /// c_i = p_i + rho_i in the coordinates the segmenter was given.
  std::vector<Vec3> centreline;
  SegmentationState state;
  /// One entry per optimizer step (terms with zero coefficient read 0), then
  /// a final full-cloud evaluation with every term filled in.
  std::vector<LossBreakdown> loss_history;
  bool converged = false;
  int steps_used = 0;
  std::size_t degenerate_spectrum = 0;

  std::size_t inlier_count() const noexcept;
};

/// Inclusive start: every logit 2 (w ~ 0.88); rho_i points from the point to
/// the median (y, z) of its slice, with 32 equal-width slices along x.
/// The seed is accepted for interface stability; the result does not depend on it.
SegmentationState initialize_state(const PointCloud& cloud, std::uint64_t seed = 0);

inline constexpr int kInitSlices = 32;
inline constexpr double kInitLogit = 2.0;

/// Minimizes the total loss over weight logits and centreline vectors with Adam.
/// The cloud must already be normalized (log along x, radius ~ 1). Each step
/// evaluates one lengthwise batch (round-robin) on a seeded random subsample.
/// Throws NonFinite naming the step when the loss or gradient blows up, and
/// propagates loss errors.
SegmentationResult segment(const PointCloud& cloud, const LossWeights& weights,
                           const OptimizerConfig& config);

/// Weighted curve through the inliers' centreline points. Throws RankDeficient
/// when there are too few distinct inliers for the degree.
CurveFit extract_centreline(const SegmentationResult& result, const PointCloud& cloud, int degree);

}  // namespace logseg
