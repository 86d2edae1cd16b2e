#pragma once

#include <array>
#include <span>
#include <vector>

#include "logseg/geometry.hpp"

namespace logseg {

inline constexpr int kMaxCurveDegree = 3;

/// Normal-equation systems whose 1-norm condition estimate exceeds this are
/// rejected as RankDeficient.
inline constexpr double kMaxConditionNumber = 1e12;

/// Centreline polynomial y(x), z(x) in the monomial basis, lowest power first.
struct CurveFit {
  int degree = 0;
  std::vector<double> coeffs_y;
  std::vector<double> coeffs_z;

  Vec2 operator()(double x) const noexcept;
};

/// Weighted polynomial regression matrix X^T W X for a Vandermonde X, with a
/// Cholesky factorization for repeated solves. Degree is at most
/// kMaxCurveDegree, so everything lives on the stack.
class VandermondeSystem {
 public:
  explicit VandermondeSystem(int degree);

  int degree() const noexcept { return degree_; }
  int size() const noexcept { return degree_ + 1; }

  void add(double x, double w) noexcept;

  /// Factors the accumulated matrix. Throws RankDeficient when it is not
  /// numerically positive definite or its condition estimate is too large.
  void factor();

  /// Solves (X^T W X) a = rhs in place. Requires factor().
  void solve(std::span<double> rhs) const noexcept;

  double weight_sum() const noexcept { return matrix_[0]; }

 private:
  int degree_;
  std::array<double, 16> matrix_{};
  std::array<double, 16> chol_{};
  bool factored_ = false;
};

/// Powers 1, x, x^2, ... up to the degree.
inline std::array<double, kMaxCurveDegree + 1> monomials(double x, int degree) noexcept {
  std::array<double, kMaxCurveDegree + 1> p{};
  p[0] = 1.0;
  for (int d = 1; d <= degree; ++d) p[d] = p[d - 1] * x;
  return p;
}

/// Coefficients minimising sum w_i |(y_i, z_i) - poly(x_i)|^2.
/// Throws AllWeightsZero, RankDeficient, LengthMismatch or InvalidArgument
/// (degree outside [0, kMaxCurveDegree]).
CurveFit fit_weighted_polynomial(std::span<const double> xs, std::span<const Vec2> yz,
                                 std::span<const double> weights, int degree);

/// Horner evaluation at every x.
std::vector<Vec2> evaluate_curve(const CurveFit& fit, std::span<const double> xs);

}  // namespace logseg
