#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace logseg {

/// Adam with bias correction over a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);

  void step(std::span<double> params, std::span<const double> grad);

  std::size_t steps() const noexcept { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  double beta1_power_ = 1.0;
  double beta2_power_ = 1.0;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace logseg
