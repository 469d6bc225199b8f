#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "claimsift/rng.hpp"
#include "claimsift/tensor.hpp"

namespace testsupport {

// Central-finite-difference gradient checking in double precision.
//
// `f` rebuilds a scalar loss from the given leaf tensors on every call. The
// analytic gradient comes from one taped backward; the numeric one from
// (f(x+h) - f(x-h)) / 2h per element, evaluated with the tape off.
inline double gradcheck_max_rel_error(std::vector<claimsift::Tensor64*> inputs,
                                      const std::function<claimsift::Tensor64()>& f,
                                      double step = 1e-5) {
  using claimsift::NoGradGuard;
  for (auto* t : inputs) {
    t->set_requires_grad(true);
    t->zero_grad();  // gradients accumulate; clear anything from a prior check
  }

  claimsift::Tensor64 loss = f();
  loss.backward();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (auto* t : inputs) {
    analytic.push_back(t->has_grad() ? t->grad() : std::vector<double>(t->values().size(), 0.0));
  }

  double worst = 0.0;
  for (size_t ti = 0; ti < inputs.size(); ++ti) {
    auto& vals = inputs[ti]->values();
    for (size_t i = 0; i < vals.size(); ++i) {
      const double orig = vals[i];
      double up, down;
      {
        NoGradGuard no_grad;
        vals[i] = orig + step;
        up = f().item();
        vals[i] = orig - step;
        down = f().item();
      }
      vals[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[ti][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-3});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

inline claimsift::Tensor64 random_tensor(claimsift::Shape shape, claimsift::Rng& rng,
                                         double lo = -1.0, double hi = 1.0) {
  auto t = claimsift::Tensor64::zeros(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Fixed random weights turn a tensor-valued function into a scalar one so a
// single backward covers every output element.
inline std::vector<double> random_weights(size_t n, claimsift::Rng& rng) {
  std::vector<double> w(n);
  for (auto& v : w) v = rng.uniform(-1.0, 1.0);
  return w;
}

}  // namespace testsupport
