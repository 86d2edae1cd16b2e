#pragma once

#include <cmath>
#include <span>

namespace logseg {

/// Weights summing to at most this are treated as an empty selection.
inline constexpr double kWeightEpsilon = 1e-12;

/// sum(w_i x_i) / sum(w_i). Throws AllWeightsZero when sum(w) <= kWeightEpsilon
/// and LengthMismatch on unequal spans.
double weighted_mean(std::span<const double> values, std::span<const double> weights);

/// Median of a copy of the values; the mean of the two middle elements for even
/// counts. Throws InvalidArgument on empty input.
double median(std::span<const double> values);

/// Median absolute deviation from the median, without a consistency factor.
double median_absolute_deviation(std::span<const double> values);

/// Overflow-safe logistic function.
inline double sigmoid(double logit) noexcept {
  if (logit >= 0.0) return 1.0 / (1.0 + std::exp(-logit));
  const double e = std::exp(logit);
  return e / (1.0 + e);
}

}  // namespace logseg
