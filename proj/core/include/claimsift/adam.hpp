#pragma once

#include <cmath>
#include <vector>

#include "claimsift/tensor.hpp"

namespace claimsift {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

// Adam with bias correction:
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
//   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
// State buffers are keyed by position in the parameter list, which must stay
// stable across steps.
template <typename Real>
class AdamT {
 public:
  explicit AdamT(AdamConfig config) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  long long step_count() const { return t_; }

  // Applies one update to every tensor that has a populated gradient.
  void step(std::vector<TensorT<Real>*> params) {
    if (first_moment_.empty()) {
      first_moment_.resize(params.size());
      second_moment_.resize(params.size());
      for (size_t p = 0; p < params.size(); ++p) {
        first_moment_[p].assign(params[p]->values().size(), Real(0));
        second_moment_[p].assign(params[p]->values().size(), Real(0));
      }
    }
    ++t_;
    const Real b1 = Real(config_.beta1), b2 = Real(config_.beta2);
    const Real lr = Real(config_.learning_rate), eps = Real(config_.epsilon);
    const Real bc1 = Real(1) - std::pow(b1, Real(t_));
    const Real bc2 = Real(1) - std::pow(b2, Real(t_));
    for (size_t p = 0; p < params.size(); ++p) {
      auto& param = *params[p];
      if (!param.has_grad()) continue;
      auto& theta = param.values();
      const auto& g = param.grad();
      auto& m = first_moment_[p];
      auto& v = second_moment_[p];
      for (size_t i = 0; i < theta.size(); ++i) {
        m[i] = b1 * m[i] + (Real(1) - b1) * g[i];
        v[i] = b2 * v[i] + (Real(1) - b2) * g[i] * g[i];
        const Real m_hat = m[i] / bc1;
        const Real v_hat = v[i] / bc2;
        theta[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
      }
    }
  }

 private:
  AdamConfig config_;
  long long t_ = 0;
  std::vector<std::vector<Real>> first_moment_;
  std::vector<std::vector<Real>> second_moment_;
};

using Adam = AdamT<float>;

}  // namespace claimsift
