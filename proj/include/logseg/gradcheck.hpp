#pragma once

#include <array>
#include <cstdint>

#include "logseg/loss.hpp"

namespace logseg {

struct GradcheckConfig {
  std::size_t points = 200;
  int k = 16;
  int trials = 50;
  double step = 1e-5;
  int degree = 1;
  std::uint64_t seed = 0;
};

/// Worst analytic-vs-central-difference disagreement per term and for the
/// default-weighted total. The error of one trial is
/// max_i |analytic_i - numeric_i| / max_i |numeric_i| over every logit and
/// centreline component.
struct GradcheckReport {
  std::array<double, 6> term_error{};
  double total_error = 0.0;
  int trials_run = 0;
  /// Trials skipped because a neighborhood had a near-repeated eigenvalue.
  int trials_excluded = 0;
  std::size_t degenerate_neighborhoods = 0;
  double seconds = 0.0;

  double worst() const noexcept;
  bool passed(double tolerance = 1e-4) const noexcept { return worst() < tolerance; }
};

/// Random noisy log-like clouds with random logits and centreline vectors,
/// checked coordinate by coordinate with central differences.
GradcheckReport run_gradcheck(const GradcheckConfig& config);

}  // namespace logseg
