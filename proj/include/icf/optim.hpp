#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace icf {

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second-moment state for one parameter group.
class AdamState {
 public:
  explicit AdamState(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

  // One update with bias correction; `t` counts optimizer steps from 1.
  void step(double* params, const double* grads, std::size_t n, const AdamParams& p,
            long long t) {
    const double bc1 = 1.0 - std::pow(p.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(p.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < n; ++i) {
      m_[i] = p.beta1 * m_[i] + (1.0 - p.beta1) * grads[i];
      v_[i] = p.beta2 * v_[i] + (1.0 - p.beta2) * grads[i] * grads[i];
      params[i] -= p.learning_rate * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + p.epsilon);
    }
  }

 private:
  std::vector<double> m_, v_;
};

}  // namespace icf
