#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "logseg/geometry.hpp"
#include "logseg/knn.hpp"

namespace logseg {

/// Centreline vectors shorter than this are left out of the normal term.
inline constexpr double kRhoEpsilon = 1e-9;
/// Eigenvalue gaps below this make the normal-direction derivative unusable.
inline constexpr double kSpectralGapEpsilon = 1e-7;

enum class Term { Fit, Distance, Deviation, Plane, Normal, Weights };
inline constexpr std::array<Term, 6> kAllTerms = {Term::Fit,   Term::Distance, Term::Deviation,
                                                  Term::Plane, Term::Normal,   Term::Weights};
const char* to_string(Term term) noexcept;

/// Coefficients of the six loss terms. The defaults sum to 1.
struct LossWeights {
  double fit = 0.26;
  double rho = 0.12;
  double sigma = 0.18;
  double plane = 0.12;
  double normal = 0.09;
  double weights = 0.23;

  double operator[](Term t) const noexcept;
  double& operator[](Term t) noexcept;
  /// Throws InvalidArgument unless every coefficient is finite and >= 0.
  void validate() const;
  /// Only `term` active, with coefficient 1.
  static LossWeights only(Term term) noexcept;
  static LossWeights zero() noexcept;
};

struct LossBreakdown {
  double fit = 0.0;
  double rho = 0.0;
  double sigma = 0.0;
  double plane = 0.0;
  double normal = 0.0;
  double weights = 0.0;
  double total = 0.0;

  double operator[](Term t) const noexcept;
  double& operator[](Term t) noexcept;
};

/// The latent variables being optimized: one weight logit and one (y, z)
/// centreline vector per point. The x component of every centreline vector is 0.
struct SegmentationState {
  std::vector<double> logits;
  std::vector<Vec2> rho;

  std::size_t size() const noexcept { return logits.size(); }
  std::vector<double> weights() const;
};

/// Gradient in weight space: d total / d w_i and d total / d rho_i.
struct WeightGradient {
  std::vector<double> weights;
  std::vector<Vec2> rho;
  /// Neighborhoods whose normal derivative was dropped for a small eigen gap.
  std::size_t degenerate_spectrum = 0;
};

/// Gradient in optimizer space: d total / d logit_i and d total / d rho_i.
struct LossGradient {
  std::vector<double> logits;
  std::vector<Vec2> rho;
  std::size_t degenerate_spectrum = 0;
};

/// Evaluates the loss and its exact gradient for one cloud. Holds the cloud in
/// structure-of-arrays form; the cloud and neighborhoods must outlive it.
///
/// Terms whose coefficient is zero contribute no gradient. Their values are
/// still reported unless `all_terms` is false, in which case they read 0 and
/// are not computed at all (the segmenter's inner loop uses this).
class LossModel {
 public:
  /// neighborhoods may be null when the plane and normal terms are never used.
  LossModel(const PointCloud& cloud, const Neighborhoods* neighborhoods, int degree);

  struct Options {
    /// Points whose terms enter the means; empty = every point. Must be sorted
    /// and unique. Neighborhood members are always taken from the full cloud.
    std::span<const std::uint32_t> subset;
    bool all_terms = true;
  };

  LossBreakdown evaluate(std::span<const double> weights, std::span<const Vec2> rho,
                         const LossWeights& lambda, const Options& options,
                         WeightGradient* gradient = nullptr) const;

  /// Convenience wrapper: logits -> sigmoid weights, gradient chained through
  /// the sigmoid.
  LossBreakdown evaluate(const SegmentationState& state, const LossWeights& lambda,
                         const Options& options, LossGradient* gradient = nullptr) const;

  std::size_t size() const noexcept { return xs_.size(); }
  int degree() const noexcept { return degree_; }

 private:
  const PointCloud* cloud_;
  const Neighborhoods* neighborhoods_;
  int degree_;
  std::vector<double> xs_, ys_, zs_;
};

/// c_i = p_i + (0, rho_y, rho_z).
std::vector<Vec3> centreline_points(const PointCloud& cloud, const SegmentationState& state);

// Individual terms over all points, each matching the corresponding component
// of total_loss. The weight-space overloads bypass the sigmoid.
double fit_loss(const PointCloud& cloud, const SegmentationState& state, int degree);
double fit_loss(const PointCloud& cloud, std::span<const double> w, std::span<const Vec2> rho, int degree);
double distance_loss(const SegmentationState& state);
double distance_loss(std::span<const double> w, std::span<const Vec2> rho);
double deviation_loss(const PointCloud& cloud, const SegmentationState& state);
double deviation_loss(const PointCloud& cloud, std::span<const double> w, std::span<const Vec2> rho);
double plane_loss(const PointCloud& cloud, const SegmentationState& state, const Neighborhoods& nb);
double plane_loss(const PointCloud& cloud, std::span<const double> w, const Neighborhoods& nb);
double normal_loss(const PointCloud& cloud, const SegmentationState& state, const Neighborhoods& nb);
double normal_loss(const PointCloud& cloud, std::span<const double> w, std::span<const Vec2> rho,
                   const Neighborhoods& nb);
double weights_loss(const SegmentationState& state);
double weights_loss(std::span<const double> w);

/// Plane term of one neighborhood from its eigenvalues (descending):
/// 1 - l2/l1 + l3/l2, with each ratio taken as 0 when its denominator is at
/// most kEigenClamp.
double plane_term(const std::array<double, 3>& eigenvalues) noexcept;

LossBreakdown total_loss(const PointCloud& cloud, const SegmentationState& state,
                         const Neighborhoods& nb, const LossWeights& lambda, int degree);

LossGradient total_loss_gradient(const PointCloud& cloud, const SegmentationState& state,
                                 const Neighborhoods& nb, const LossWeights& lambda, int degree);

}  // namespace logseg
