#pragma once

#include <cmath>

#include "claimsift/rng.hpp"
#include "claimsift/tensor.hpp"

namespace claimsift {

// Glorot uniform: +/- sqrt(6 / (fan_in + fan_out)).
template <typename Real>
void glorot_uniform(TensorT<Real>& t, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : t.values()) v = static_cast<Real>(rng.uniform(-limit, limit));
}

// Fan convention: 2-d kernels use (rows, cols); conv kernels (K, Cin, Cout)
// use (K*Cin, K*Cout).
template <typename Real>
void glorot_uniform(TensorT<Real>& t, Rng& rng) {
  if (t.rank() == 3) {
    glorot_uniform(t, t.dim(0) * t.dim(1), t.dim(0) * t.dim(2), rng);
  } else if (t.rank() == 2) {
    glorot_uniform(t, t.dim(0), t.dim(1), rng);
  } else {
    glorot_uniform(t, static_cast<int>(t.size()), static_cast<int>(t.size()), rng);
  }
}

// LSTM bias of layout (i, f, g, o) x units, with the forget gate at 1.
template <typename Real>
void lstm_bias_init(TensorT<Real>& bias, int units) {
  auto& v = bias.values();
  for (size_t i = 0; i < v.size(); ++i) v[i] = Real(0);
  for (int i = units; i < 2 * units; ++i) v[i] = Real(1);
}

}  // namespace claimsift
