#include "logseg/optimizer.hpp"

#include <cmath>

#include "logseg/error.hpp"

namespace logseg {

Adam::Adam(std::size_t size, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw Error(ErrorKind::LengthMismatch, "Adam: parameter count changed");
  }
  ++t_;
  beta1_power_ *= beta1_;
  beta2_power_ *= beta2_;
  const double c1 = 1.0 / (1.0 - beta1_power_);
  const double c2 = 1.0 / (1.0 - beta2_power_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] * c1) / (std::sqrt(v_[i] * c2) + eps_);
  }
}

}  // namespace logseg
