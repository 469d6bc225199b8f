#pragma once

#include <utility>
#include <vector>

#include "claimsift/ops.hpp"

// Composite layers assembled from the primitives in ops.hpp, so their
// backward passes come from the tape.

namespace claimsift {

// One LSTM direction's weights: input kernel (E, 4u), recurrent kernel
// (u, 4u), bias (4u). The packed 4u axis is ordered (input, forget, cell,
// output); checkpoints depend on this layout.
template <typename Real>
struct LstmWeights {
  TensorT<Real> kernel;
  TensorT<Real> recurrent;
  TensorT<Real> bias;

  int units() const { return recurrent.dim(0); }
};

// Standard LSTM cell update.
//   i,f = sigmoid, g = tanh, o = sigmoid
//   c_t = f (.) c_prev + i (.) g;  h_t = o (.) tanh(c_t)
template <typename Real>
std::pair<TensorT<Real>, TensorT<Real>> lstm_cell_step(const TensorT<Real>& x_t,
                                                       const TensorT<Real>& h_prev,
                                                       const TensorT<Real>& c_prev,
                                                       const LstmWeights<Real>& w) {
  const int u = w.units();
  detail::check(x_t.rank() == 2 && x_t.dim(1) == w.kernel.dim(0), "lstm_cell_step",
                "input " + shape_str(x_t.shape()) + " does not match kernel " +
                    shape_str(w.kernel.shape()));
  detail::check(h_prev.shape() == Shape({x_t.dim(0), u}) && c_prev.shape() == h_prev.shape(),
                "lstm_cell_step",
                "state " + shape_str(h_prev.shape()) + " does not match units " +
                    std::to_string(u));
  auto z = add_bias(add(matmul(x_t, w.kernel), matmul(h_prev, w.recurrent)), w.bias);
  auto i = sigmoid(slice_last(z, 0, u));
  auto f = sigmoid(slice_last(z, u, u));
  auto g = tanh(slice_last(z, 2 * u, u));
  auto o = sigmoid(slice_last(z, 3 * u, u));
  auto c = add(mul(f, c_prev), mul(i, g));
  auto h = mul(o, tanh(c));
  return {h, c};
}

// Runs one LSTM over x (N, T, E) in the given time direction, returning the
// per-step hidden states indexed by absolute time.
template <typename Real>
std::vector<TensorT<Real>> lstm_run(const TensorT<Real>& x, const LstmWeights<Real>& w,
                                    bool backwards) {
  const int n = x.dim(0), t = x.dim(1);
  const int u = w.units();
  std::vector<TensorT<Real>> hs(t);
  auto h = TensorT<Real>::zeros({n, u});
  auto c = TensorT<Real>::zeros({n, u});
  for (int step = 0; step < t; ++step) {
    const int at = backwards ? t - 1 - step : step;
    auto [h_next, c_next] = lstm_cell_step(time_step(x, at), h, c, w);
    h = h_next;
    c = c_next;
    hs[at] = h;
  }
  return hs;
}

// Bidirectional LSTM over x (N, T, E): independent forward and backward
// passes, feature-concatenated. return_sequences yields (N, T, 2u), otherwise
// the two final states concatenated as (N, 2u).
template <typename Real>
TensorT<Real> bidirectional_lstm(const TensorT<Real>& x, const LstmWeights<Real>& fwd,
                                 const LstmWeights<Real>& bwd, bool return_sequences) {
  detail::check(x.rank() == 3, "bidirectional", "expected (N,T,E), got " + shape_str(x.shape()));
  detail::check(x.dim(1) >= 1, "bidirectional", "empty time axis in " + shape_str(x.shape()));
  const int t = x.dim(1);
  auto hf = lstm_run(x, fwd, false);
  auto hb = lstm_run(x, bwd, true);
  if (return_sequences) {
    std::vector<TensorT<Real>> merged(t);
    for (int tt = 0; tt < t; ++tt) merged[tt] = concat_last(hf[tt], hb[tt]);
    return stack_time(merged);
  }
  // Final state of each direction: forward ends at t-1, backward at 0.
  return concat_last(hf[t - 1], hb[0]);
}

// Score-vector attention pooling: s_t = h_t . w + b, alpha = softmax(s),
// out = sum_t alpha_t h_t. h (N, T, D), w (D, 1), b (1) -> (N, D).
template <typename Real>
TensorT<Real> attention_pool(const TensorT<Real>& h, const TensorT<Real>& score_kernel,
                             const TensorT<Real>& score_bias) {
  detail::check(h.rank() == 3 && h.dim(1) >= 1, "attention_pool",
                "expected (N,T,D) with T>=1, got " + shape_str(h.shape()));
  auto scores = squeeze_last(linear(h, score_kernel, score_bias));  // (N, T)
  auto alpha = softmax(scores);
  return weighted_sum_time(h, alpha);
}

template <typename Real>
struct MhaWeights {
  TensorT<Real> query_kernel, query_bias;
  TensorT<Real> key_kernel, key_bias;
  TensorT<Real> value_kernel, value_bias;
  TensorT<Real> out_kernel, out_bias;
};

// Multi-head scaled dot-product self-attention over x (N, T, D). Heads are
// concatenated and output-projected back to D.
template <typename Real>
TensorT<Real> multi_head_self_attention(const TensorT<Real>& x, const MhaWeights<Real>& w,
                                        int heads) {
  detail::check(x.rank() == 3, "multi_head_self_attention",
                "expected (N,T,D), got " + shape_str(x.shape()));
  detail::check(heads >= 1 && x.dim(2) % heads == 0, "multi_head_self_attention",
                "feature dim " + std::to_string(x.dim(2)) + " not divisible by " +
                    std::to_string(heads) + " heads");
  auto q = linear(x, w.query_kernel, w.query_bias);
  auto k = linear(x, w.key_kernel, w.key_bias);
  auto v = linear(x, w.value_kernel, w.value_bias);
  auto alpha = softmax(attention_scores(q, k, heads));
  auto ctx = attention_combine(alpha, v, heads);
  return linear(ctx, w.out_kernel, w.out_bias);
}

}  // namespace claimsift
