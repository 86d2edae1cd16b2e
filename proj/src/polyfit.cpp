#include "logseg/polyfit.hpp"

#include <cmath>
#include <string>

#include "logseg/error.hpp"
#include "logseg/stats.hpp"

namespace logseg {

Vec2 CurveFit::operator()(double x) const noexcept {
  Vec2 out;
  for (int d = degree; d >= 0; --d) {
    out.y = out.y * x + coeffs_y[d];
    out.z = out.z * x + coeffs_z[d];
  }
  return out;
}

VandermondeSystem::VandermondeSystem(int degree) : degree_(degree) {
  if (degree < 0 || degree > kMaxCurveDegree) {
    throw Error(ErrorKind::InvalidArgument, "curve degree must be in [0, " +
                                                std::to_string(kMaxCurveDegree) + "]");
  }
}

void VandermondeSystem::add(double x, double w) noexcept {
  const int m = size();
  // The matrix is Hankel: entry (r, c) only depends on r + c.
  double powers[2 * kMaxCurveDegree + 1];
  powers[0] = w;
  for (int p = 1; p < 2 * m - 1; ++p) powers[p] = powers[p - 1] * x;
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) matrix_[r * 4 + c] += powers[r + c];
  }
  factored_ = false;
}

void VandermondeSystem::factor() {
  const int m = size();
  if (!(matrix_[0] > kWeightEpsilon)) {
    throw Error(ErrorKind::AllWeightsZero, "regression weights sum to zero");
  }
  chol_.fill(0.0);
  for (int j = 0; j < m; ++j) {
    double diag = matrix_[j * 4 + j];
    for (int p = 0; p < j; ++p) diag -= chol_[j * 4 + p] * chol_[j * 4 + p];
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw Error(ErrorKind::RankDeficient, "normal matrix is not positive definite");
    }
    const double ljj = std::sqrt(diag);
    chol_[j * 4 + j] = ljj;
    for (int i = j + 1; i < m; ++i) {
      double v = matrix_[i * 4 + j];
      for (int p = 0; p < j; ++p) v -= chol_[i * 4 + p] * chol_[j * 4 + p];
      chol_[i * 4 + j] = v / ljj;
    }
  }
  factored_ = true;

  // 1-norm condition number from the explicit inverse; m <= 4 keeps this cheap.
  double norm_a = 0.0;
  double norm_inv = 0.0;
  for (int c = 0; c < m; ++c) {
    std::array<double, 4> e{};
    e[c] = 1.0;
    solve(std::span<double>(e.data(), m));
    double col_a = 0.0;
    double col_inv = 0.0;
    for (int r = 0; r < m; ++r) {
      col_a += std::abs(matrix_[r * 4 + c]);
      col_inv += std::abs(e[r]);
    }
    norm_a = std::max(norm_a, col_a);
    norm_inv = std::max(norm_inv, col_inv);
  }
  const double cond = norm_a * norm_inv;
  if (!std::isfinite(cond) || cond > kMaxConditionNumber) {
    factored_ = false;
    throw Error(ErrorKind::RankDeficient,
                "normal matrix condition estimate " + std::to_string(cond) + " exceeds 1e12");
  }
}

void VandermondeSystem::solve(std::span<double> rhs) const noexcept {
  const int m = size();
  for (int i = 0; i < m; ++i) {
    double v = rhs[i];
    for (int p = 0; p < i; ++p) v -= chol_[i * 4 + p] * rhs[p];
    rhs[i] = v / chol_[i * 4 + i];
  }
  for (int i = m - 1; i >= 0; --i) {
    double v = rhs[i];
    for (int p = i + 1; p < m; ++p) v -= chol_[p * 4 + i] * rhs[p];
    rhs[i] = v / chol_[i * 4 + i];
  }
}

CurveFit fit_weighted_polynomial(std::span<const double> xs, std::span<const Vec2> yz,
                                 std::span<const double> weights, int degree) {
  if (xs.size() != yz.size() || xs.size() != weights.size()) {
    throw Error(ErrorKind::LengthMismatch, "fit_weighted_polynomial: input lengths differ");
  }
  VandermondeSystem system(degree);
  const int m = system.size();
  std::array<double, 4> by{};
  std::array<double, 4> bz{};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double w = weights[i];
    system.add(xs[i], w);
    const auto p = monomials(xs[i], degree);
    for (int d = 0; d < m; ++d) {
      by[d] += w * p[d] * yz[i].y;
      bz[d] += w * p[d] * yz[i].z;
    }
  }
  system.factor();
  system.solve(std::span<double>(by.data(), m));
  system.solve(std::span<double>(bz.data(), m));
  CurveFit fit;
  fit.degree = degree;
  fit.coeffs_y.assign(by.begin(), by.begin() + m);
  fit.coeffs_z.assign(bz.begin(), bz.begin() + m);
  return fit;
}

std::vector<Vec2> evaluate_curve(const CurveFit& fit, std::span<const double> xs) {
  std::vector<Vec2> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(fit(x));
  return out;
}

}  // namespace logseg
