#include "logseg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "logseg/error.hpp"

namespace logseg {

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) {
    throw Error(ErrorKind::LengthMismatch, "weighted_mean: values and weights differ in length");
  }
  double sw = 0.0;
  double swx = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sw += weights[i];
    swx += weights[i] * values[i];
  }
  if (!(sw > kWeightEpsilon)) throw Error(ErrorKind::AllWeightsZero, "weighted_mean: weights sum to zero");
  return swx / sw;
}

double median(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::InvalidArgument, "median of an empty sequence");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double median_absolute_deviation(std::span<const double> values) {
  const double m = median(values);
  std::vector<double> dev(values.size());
  std::transform(values.begin(), values.end(), dev.begin(), [m](double v) { return std::abs(v - m); });
  return median(dev);
}

}  // namespace logseg
