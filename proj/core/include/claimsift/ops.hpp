#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "claimsift/rng.hpp"
#include "claimsift/tensor.hpp"

// Tensor primitives. Every op validates shapes, computes the forward value,
// and records a backward closure on the tape when gradients are enabled and
// some input requires them. Gradients accumulate additively across fan-out.
//
// Loop orders are fixed and OpenMP parallelism is only ever over independent
// output slices, so results are bit-identical for a given seed regardless of
// thread count.

namespace claimsift {
namespace detail {

template <typename Real>
std::shared_ptr<TensorNode<Real>> result_node(Shape shape) {
  auto n = std::make_shared<TensorNode<Real>>();
  long long count = numel(shape);
  n->shape = std::move(shape);
  n->value.assign(static_cast<size_t>(count), Real(0));
  return n;
}

template <typename Real>
bool any_requires_grad(std::initializer_list<const TensorT<Real>*> inputs) {
  for (const auto* t : inputs) {
    if (t->node()->requires_grad) return true;
  }
  return false;
}

template <typename Real, typename F>
void record(const std::shared_ptr<TensorNode<Real>>& out,
            std::initializer_list<const TensorT<Real>*> inputs, F&& backward) {
  if (!grad_enabled() || !any_requires_grad(inputs)) return;
  out->requires_grad = true;
  for (const auto* t : inputs) out->parents.push_back(t->node());
  out->backward = std::forward<F>(backward);
}

inline void check(bool ok, const std::string& op, const std::string& message) {
  if (!ok) throw Error(op + ": " + message);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise arithmetic
// ---------------------------------------------------------------------------

template <typename Real>
TensorT<Real> add(const TensorT<Real>& a, const TensorT<Real>& b) {
  detail::check(a.shape() == b.shape(), "add",
                "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  auto out = detail::result_node<Real>(a.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] + bv[i];
  auto* an = a.node().get();
  auto* bn = b.node().get();
  detail::record(out, {&a, &b}, [an, bn](TensorNode<Real>& o) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < o.grad.size(); ++i) an->grad[i] += o.grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < o.grad.size(); ++i) bn->grad[i] += o.grad[i];
    }
  });
  return TensorT<Real>(out);
}

template <typename Real>
TensorT<Real> mul(const TensorT<Real>& a, const TensorT<Real>& b) {
  detail::check(a.shape() == b.shape(), "mul",
                "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  auto out = detail::result_node<Real>(a.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] * bv[i];
  auto* an = a.node().get();
  auto* bn = b.node().get();
  detail::record(out, {&a, &b}, [an, bn](TensorNode<Real>& o) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < o.grad.size(); ++i) an->grad[i] += o.grad[i] * bn->value[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < o.grad.size(); ++i) bn->grad[i] += o.grad[i] * an->value[i];
    }
  });
  return TensorT<Real>(out);
}

template <typename Real>
TensorT<Real> scale(const TensorT<Real>& x, Real c) {
  auto out = detail::result_node<Real>(x.shape());
  const auto& xv = x.values();
  for (size_t i = 0; i < xv.size(); ++i) out->value[i] = c * xv[i];
  auto* xn = x.node().get();
  detail::record(out, {&x}, [xn, c](TensorNode<Real>& o) {
    xn->ensure_grad();
    for (size_t i = 0; i < o.grad.size(); ++i) xn->grad[i] += c * o.grad[i];
  });
  return TensorT<Real>(out);
}

// x (..., C) + bias (C), broadcast over leading dims.
template <typename Real>
TensorT<Real> add_bias(const TensorT<Real>& x, const TensorT<Real>& bias) {
  detail::check(bias.rank() == 1, "add_bias", "bias must be 1-d, got " + shape_str(bias.shape()));
  const int c = x.dim(x.rank() - 1);
  detail::check(c == bias.dim(0), "add_bias",
                "shape mismatch " + shape_str(x.shape()) + " vs " + shape_str(bias.shape()));
  auto out = detail::result_node<Real>(x.shape());
  const auto& xv = x.values();
  const auto& bv = bias.values();
  const size_t rows = xv.size() / c;
  for (size_t r = 0; r < rows; ++r) {
    const Real* xr = xv.data() + r * c;
    Real* yr = out->value.data() + r * c;
    for (int j = 0; j < c; ++j) yr[j] = xr[j] + bv[j];
  }
  auto* xn = x.node().get();
  auto* bn = bias.node().get();
  detail::record(out, {&x, &bias}, [xn, bn, rows, c](TensorNode<Real>& o) {
    if (xn->requires_grad) {
      xn->ensure_grad();
      for (size_t i = 0; i < o.grad.size(); ++i) xn->grad[i] += o.grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (size_t r = 0; r < rows; ++r) {
        const Real* gr = o.grad.data() + r * c;
        for (int j = 0; j < c; ++j) bn->grad[j] += gr[j];
      }
    }
  });
  return TensorT<Real>(out);
}

// x (N, T, C) + table (T, C), broadcast over the batch axis.
template <typename Real>
TensorT<Real> add_position(const TensorT<Real>& x, const TensorT<Real>& table) {
  detail::check(x.rank() == 3 && table.rank() == 2 && x.dim(1) == table.dim(0) &&
                    x.dim(2) == table.dim(1),
                "add_position",
                "shape mismatch " + shape_str(x.shape()) + " vs " + shape_str(table.shape()));
  const int n = x.dim(0), t = x.dim(1), c = x.dim(2);
  auto out = detail::result_node<Real>(x.shape());
  const auto& xv = x.values();
  const auto& pv = table.values();
  const size_t plane = static_cast<size_t>(t) * c;
  for (int i = 0; i < n; ++i) {
    const Real* xr = xv.data() + i * plane;
    Real* yr = out->value.data() + i * plane;
    for (size_t j = 0; j < plane; ++j) yr[j] = xr[j] + pv[j];
  }
  auto* xn = x.node().get();
  auto* pn = table.node().get();
  detail::record(out, {&x, &table}, [xn, pn, n, plane](TensorNode<Real>& o) {
    if (xn->requires_grad) {
      xn->ensure_grad();
      for (size_t i = 0; i < o.grad.size(); ++i) xn->grad[i] += o.grad[i];
    }
    if (pn->requires_grad) {
      pn->ensure_grad();
      for (int i = 0; i < n; ++i) {
        const Real* gr = o.grad.data() + i * plane;
        for (size_t j = 0; j < plane; ++j) pn->grad[j] += gr[j];
      }
    }
  });
  return TensorT<Real>(out);
}

// ---------------------------------------------------------------------------
// activations
// ---------------------------------------------------------------------------

template <typename Real>
TensorT<Real> sigmoid(const TensorT<Real>& x) {
  auto out = detail::result_node<Real>(x.shape());
  const auto& xv = x.values();
  for (size_t i = 0; i < xv.size(); ++i) {
    Real v = xv[i];
    if (v >= Real(0)) {
      out->value[i] = Real(1) / (Real(1) + std::exp(-v));
    } else {
      Real e = std::exp(v);
      out->value[i] = e / (Real(1) + e);
    }
  }
  auto* xn = x.node().get();
  detail::record(out, {&x}, [xn](TensorNode<Real>& o) {
    xn->ensure_grad();
    for (size_t i = 0; i < o.grad.size(); ++i) {
      Real y = o.value[i];
      xn->grad[i] += o.grad[i] * y * (Real(1) - y);
    }
  });
  return TensorT<Real>(out);
}

template <typename Real>
TensorT<Real> tanh(const TensorT<Real>& x) {
  auto out = detail::result_node<Real>(x.shape());
  const auto& xv = x.values();
  for (size_t i = 0; i < xv.size(); ++i) out->value[i] = std::tanh(xv[i]);
  auto* xn = x.node().get();
  detail::record(out, {&x}, [xn](TensorNode<Real>& o) {
    xn->ensure_grad();
    for (size_t i = 0; i < o.grad.size(); ++i) {
      Real y = o.value[i];
      xn->grad[i] += o.grad[i] * (Real(1) - y * y);
    }
  });
  return TensorT<Real>(out);
}

template <typename Real>
TensorT<Real> relu(const TensorT<Real>& x) {
  auto out = detail::result_node<Real>(x.shape());
  const auto& xv = x.values();
  for (size_t i = 0; i < xv.size(); ++i) out->value[i] = xv[i] > Real(0) ? xv[i] : Real(0);
  auto* xn = x.node().get();
  detail::record(out, {&x}, [xn](TensorNode<Real>& o) {
    xn->ensure_grad();
    for (size_t i = 0; i < o.grad.size(); ++i) {
      if (xn->value[i] > Real(0)) xn->grad[i] += o.grad[i];
    }
  });
  return TensorT<Real>(out);
}

// Row-stable softmax over the last axis. Rows sum to 1 within float rounding.
template <typename Real>
TensorT<Real> softmax(const TensorT<Real>& x) {
  detail::check(x.rank() >= 1, "softmax", "rank-0 input");
  const int c = x.dim(x.rank() - 1);
  detail::check(c >= 1, "softmax", "empty last axis in " + shape_str(x.shape()));
  auto out = detail::result_node<Real>(x.shape());
  const auto& xv = x.values();
  const size_t rows = xv.size() / c;
  for (size_t r = 0; r < rows; ++r) {
    const Real* xr = xv.data() + r * c;
    Real* yr = out->value.data() + r * c;
    Real mx = xr[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, xr[j]);
    Real sum = Real(0);
    for (int j = 0; j < c; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      sum += yr[j];
    }
    Real inv = Real(1) / sum;
    for (int j = 0; j < c; ++j) yr[j] *= inv;
  }
  auto* xn = x.node().get();
  detail::record(out, {&x}, [xn, rows, c](TensorNode<Real>& o) {
    xn->ensure_grad();
    for (size_t r = 0; r < rows; ++r) {
      const Real* yr = o.value.data() + r * c;
      const Real* gr = o.grad.data() + r * c;
      Real dot = Real(0);
      for (int j = 0; j < c; ++j) dot += gr[j] * yr[j];
      Real* xg = xn->grad.data() + r * c;
      for (int j = 0; j < c; ++j) xg[j] += yr[j] * (gr[j] - dot);
    }
  });
  return TensorT<Real>(out);
}

// ---------------------------------------------------------------------------
// matrix products
// ---------------------------------------------------------------------------

namespace detail {

// C (M,P) = A (M,K) * B (K,P), row-major, C preset to zero.
template <typename Real>
void gemm(const Real* a, const Real* b, Real* c, int m, int k, int p) {
#pragma omp parallel for schedule(static) if (m >= 16)
  for (int i = 0; i < m; ++i) {
    const Real* arow = a + static_cast<size_t>(i) * k;
    Real* crow = c + static_cast<size_t>(i) * p;
    for (int kk = 0; kk < k; ++kk) {
      const Real av = arow[kk];
      if (av == Real(0)) continue;
      const Real* brow = b + static_cast<size_t>(kk) * p;
      for (int j = 0; j < p; ++j) crow[j] += av * brow[j];
    }
  }
}

// dA (M,K) += G (M,P) * B^T;  dB (K,P) += A^T * G
template <typename Real>
void gemm_backward(const Real* a, const Real* b, const Real* g, Real* da, Real* db, int m, int k,
                   int p, bool want_da, bool want_db) {
  if (want_da) {
#pragma omp parallel for schedule(static) if (m >= 16)
    for (int i = 0; i < m; ++i) {
      const Real* grow = g + static_cast<size_t>(i) * p;
      Real* darow = da + static_cast<size_t>(i) * k;
      for (int kk = 0; kk < k; ++kk) {
        const Real* brow = b + static_cast<size_t>(kk) * p;
        Real acc = Real(0);
        for (int j = 0; j < p; ++j) acc += grow[j] * brow[j];
        darow[kk] += acc;
      }
    }
  }
  if (want_db) {
    for (int i = 0; i < m; ++i) {
      const Real* arow = a + static_cast<size_t>(i) * k;
      const Real* grow = g + static_cast<size_t>(i) * p;
      for (int kk = 0; kk < k; ++kk) {
        const Real av = arow[kk];
        if (av == Real(0)) continue;
        Real* dbrow = db + static_cast<size_t>(kk) * p;
        for (int j = 0; j < p; ++j) dbrow[j] += av * grow[j];
      }
    }
  }
}

}  // namespace detail

template <typename Real>
TensorT<Real> matmul(const TensorT<Real>& a, const TensorT<Real>& b) {
  detail::check(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0), "matmul",
                "incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  const int m = a.dim(0), k = a.dim(1), p = b.dim(1);
  auto out = detail::result_node<Real>({m, p});
  detail::gemm(a.values().data(), b.values().data(), out->value.data(), m, k, p);
  auto* an = a.node().get();
  auto* bn = b.node().get();
  detail::record(out, {&a, &b}, [an, bn, m, k, p](TensorNode<Real>& o) {
    if (an->requires_grad) an->ensure_grad();
    if (bn->requires_grad) bn->ensure_grad();
    detail::gemm_backward(an->value.data(), bn->value.data(), o.grad.data(),
                          an->requires_grad ? an->grad.data() : nullptr,
                          bn->requires_grad ? bn->grad.data() : nullptr, m, k, p,
                          an->requires_grad, bn->requires_grad);
  });
  return TensorT<Real>(out);
}

// Dense layer core: x (..., Cin) * w (Cin, Cout) + bias (Cout), collapsing
// the leading axes of x into rows.
template <typename Real>
TensorT<Real> linear(const TensorT<Real>& x, const TensorT<Real>& w, const TensorT<Real>& bias) {
  detail::check(w.rank() == 2 && x.rank() >= 1 && x.dim(x.rank() - 1) == w.dim(0), "linear",
                "incompatible shapes " + shape_str(x.shape()) + " and " + shape_str(w.shape()));
  detail::check(bias.rank() == 1 && bias.dim(0) == w.dim(1), "linear",
                "bias shape " + shape_str(bias.shape()) + " does not match " +
                    shape_str(w.shape()));
  const int cin = w.dim(0), cout = w.dim(1);
  const int rows = static_cast<int>(x.size() / cin);
  Shape out_shape = x.shape();
  out_shape.back() = cout;
  auto out = detail::result_node<Real>(std::move(out_shape));
  detail::gemm(x.values().data(), w.values().data(), out->value.data(), rows, cin, cout);
  const auto& bv = bias.values();
  for (int r = 0; r < rows; ++r) {
    Real* yr = out->value.data() + static_cast<size_t>(r) * cout;
    for (int j = 0; j < cout; ++j) yr[j] += bv[j];
  }
  auto* xn = x.node().get();
  auto* wn = w.node().get();
  auto* bn = bias.node().get();
  detail::record(out, {&x, &w, &bias}, [xn, wn, bn, rows, cin, cout](TensorNode<Real>& o) {
    if (xn->requires_grad) xn->ensure_grad();
    if (wn->requires_grad) wn->ensure_grad();
    detail::gemm_backward(xn->value.data(), wn->value.data(), o.grad.data(),
                          xn->requires_grad ? xn->grad.data() : nullptr,
                          wn->requires_grad ? wn->grad.data() : nullptr, rows, cin, cout,
                          xn->requires_grad, wn->requires_grad);
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (int r = 0; r < rows; ++r) {
        const Real* gr = o.grad.data() + static_cast<size_t>(r) * cout;
        for (int j = 0; j < cout; ++j) bn->grad[j] += gr[j];
      }
    }
  });
  return TensorT<Real>(out);
}

// ---------------------------------------------------------------------------
// embedding / dropout
// ---------------------------------------------------------------------------

template <typename Real>
TensorT<Real> embedding_lookup(const TensorT<Real>& table, const IdMatrix& ids) {
  detail::check(table.rank() == 2, "embedding_lookup",
                "table must be 2-d, got " + shape_str(table.shape()));
  const int vocab = table.dim(0), width = table.dim(1);
  for (int32_t id : ids.ids) {
    detail::check(id >= 0 && id < vocab, "embedding_lookup",
                  "id " + std::to_string(id) + " outside table of " + std::to_string(vocab));
  }
  auto out = detail::result_node<Real>({ids.rows, ids.cols, width});
  const auto& tv = table.values();
  for (int r = 0; r < ids.rows; ++r) {
    for (int c = 0; c < ids.cols; ++c) {
      const Real* src = tv.data() + static_cast<size_t>(ids.at(r, c)) * width;
      Real* dst = out->value.data() + (static_cast<size_t>(r) * ids.cols + c) * width;
      std::copy(src, src + width, dst);
    }
  }
  auto* tn = table.node().get();
  IdMatrix captured = ids;
  detail::record(out, {&table}, [tn, captured = std::move(captured), width](TensorNode<Real>& o) {
    tn->ensure_grad();
    for (int r = 0; r < captured.rows; ++r) {
      for (int c = 0; c < captured.cols; ++c) {
        Real* dst = tn->grad.data() + static_cast<size_t>(captured.at(r, c)) * width;
        const Real* src = o.grad.data() + (static_cast<size_t>(r) * captured.cols + c) * width;
        for (int j = 0; j < width; ++j) dst[j] += src[j];
      }
    }
  });
  return TensorT<Real>(out);
}

// Inverted dropout: zero with probability `rate`, scale survivors by
// 1/(1-rate). Identity when not training.
template <typename Real>
TensorT<Real> dropout(const TensorT<Real>& x, double rate, bool training, Rng& rng) {
  detail::check(rate >= 0.0 && rate < 1.0, "dropout",
                "rate must be in [0,1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  auto out = detail::result_node<Real>(x.shape());
  const auto& xv = x.values();
  std::vector<Real> mask(xv.size());
  const Real keep_scale = Real(1.0 / (1.0 - rate));
  for (size_t i = 0; i < xv.size(); ++i) {
    mask[i] = rng.uniform() < rate ? Real(0) : keep_scale;
    out->value[i] = xv[i] * mask[i];
  }
  auto* xn = x.node().get();
  detail::record(out, {&x}, [xn, mask = std::move(mask)](TensorNode<Real>& o) {
    xn->ensure_grad();
    for (size_t i = 0; i < o.grad.size(); ++i) xn->grad[i] += o.grad[i] * mask[i];
  });
  return TensorT<Real>(out);
}

// ---------------------------------------------------------------------------
// convolution and pooling
// ---------------------------------------------------------------------------

// x (N, T, Cin) * kernels (K, Cin, Cout) + bias (Cout) -> (N, T-K+1, Cout).
// Valid padding, stride 1.
template <typename Real>
TensorT<Real> conv1d(const TensorT<Real>& x, const TensorT<Real>& kernels,
                     const TensorT<Real>& bias) {
  detail::check(x.rank() == 3 && kernels.rank() == 3 && x.dim(2) == kernels.dim(1), "conv1d",
                "incompatible shapes " + shape_str(x.shape()) + " and " +
                    shape_str(kernels.shape()));
  const int n = x.dim(0), t = x.dim(1), cin = x.dim(2);
  const int k = kernels.dim(0), cout = kernels.dim(2);
  detail::check(bias.rank() == 1 && bias.dim(0) == cout, "conv1d",
                "bias shape " + shape_str(bias.shape()) + " does not match " +
                    shape_str(kernels.shape()));
  const int len = t - k + 1;
  detail::check(len >= 1, "conv1d",
                "input length " + std::to_string(t) + " shorter than kernel " + std::to_string(k));
  auto out = detail::result_node<Real>({n, len, cout});
  const Real* xv = x.values().data();
  const Real* wv = kernels.values().data();
  const Real* bv = bias.values().data();
#pragma omp parallel for schedule(static) if (n >= 4)
  for (int i = 0; i < n; ++i) {
    for (int to = 0; to < len; ++to) {
      Real* yr = out->value.data() + ((static_cast<size_t>(i) * len) + to) * cout;
      for (int j = 0; j < cout; ++j) yr[j] = bv[j];
      for (int kk = 0; kk < k; ++kk) {
        const Real* xr = xv + ((static_cast<size_t>(i) * t) + to + kk) * cin;
        const Real* wk = wv + static_cast<size_t>(kk) * cin * cout;
        for (int ci = 0; ci < cin; ++ci) {
          const Real v = xr[ci];
          if (v == Real(0)) continue;
          const Real* wr = wk + static_cast<size_t>(ci) * cout;
          for (int j = 0; j < cout; ++j) yr[j] += v * wr[j];
        }
      }
    }
  }
  auto* xn = x.node().get();
  auto* wn = kernels.node().get();
  auto* bn = bias.node().get();
  detail::record(out, {&x, &kernels, &bias},
                 [xn, wn, bn, n, t, cin, k, cout, len](TensorNode<Real>& o) {
    const Real* wv = wn->value.data();
    const Real* xv = xn->value.data();
    if (xn->requires_grad) {
      xn->ensure_grad();
#pragma omp parallel for schedule(static) if (n >= 4)
      for (int i = 0; i < n; ++i) {
        for (int to = 0; to < len; ++to) {
          const Real* gr = o.grad.data() + ((static_cast<size_t>(i) * len) + to) * cout;
          for (int kk = 0; kk < k; ++kk) {
            Real* xg = xn->grad.data() + ((static_cast<size_t>(i) * t) + to + kk) * cin;
            const Real* wk = wv + static_cast<size_t>(kk) * cin * cout;
            for (int ci = 0; ci < cin; ++ci) {
              const Real* wr = wk + static_cast<size_t>(ci) * cout;
              Real acc = Real(0);
              for (int j = 0; j < cout; ++j) acc += gr[j] * wr[j];
              xg[ci] += acc;
            }
          }
        }
      }
    }
    if (wn->requires_grad) {
      wn->ensure_grad();
      for (int i = 0; i < n; ++i) {
        for (int to = 0; to < len; ++to) {
          const Real* gr = o.grad.data() + ((static_cast<size_t>(i) * len) + to) * cout;
          for (int kk = 0; kk < k; ++kk) {
            const Real* xr = xv + ((static_cast<size_t>(i) * t) + to + kk) * cin;
            Real* wk = wn->grad.data() + static_cast<size_t>(kk) * cin * cout;
            for (int ci = 0; ci < cin; ++ci) {
              const Real v = xr[ci];
              if (v == Real(0)) continue;
              Real* wr = wk + static_cast<size_t>(ci) * cout;
              for (int j = 0; j < cout; ++j) wr[j] += v * gr[j];
            }
          }
        }
      }
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      const size_t rows = static_cast<size_t>(n) * len;
      for (size_t r = 0; r < rows; ++r) {
        const Real* gr = o.grad.data() + r * cout;
        for (int j = 0; j < cout; ++j) bn->grad[j] += gr[j];
      }
    }
  });
  return TensorT<Real>(out);
}

// Non-overlapping max pooling over time; a trailing remainder shorter than
// `width` is dropped.
template <typename Real>
TensorT<Real> maxpool1d(const TensorT<Real>& x, int width) {
  detail::check(x.rank() == 3, "maxpool1d", "expected (N,T,C), got " + shape_str(x.shape()));
  detail::check(width >= 1, "maxpool1d", "width must be >= 1");
  const int n = x.dim(0), t = x.dim(1), c = x.dim(2);
  const int len = t / width;
  detail::check(len >= 1, "maxpool1d",
                "input length " + std::to_string(t) + " shorter than window " +
                    std::to_string(width));
  auto out = detail::result_node<Real>({n, len, c});
  std::vector<int32_t> argmax(static_cast<size_t>(n) * len * c);
  const Real* xv = x.values().data();
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < len; ++l) {
      Real* yr = out->value.data() + ((static_cast<size_t>(i) * len) + l) * c;
      int32_t* ar = argmax.data() + ((static_cast<size_t>(i) * len) + l) * c;
      for (int j = 0; j < c; ++j) {
        int best_t = l * width;
        Real best = xv[((static_cast<size_t>(i) * t) + best_t) * c + j];
        for (int w = 1; w < width; ++w) {
          Real v = xv[((static_cast<size_t>(i) * t) + l * width + w) * c + j];
          if (v > best) {
            best = v;
            best_t = l * width + w;
          }
        }
        yr[j] = best;
        ar[j] = best_t;
      }
    }
  }
  auto* xn = x.node().get();
  detail::record(out, {&x},
                 [xn, argmax = std::move(argmax), n, t, c, len](TensorNode<Real>& o) {
    xn->ensure_grad();
    for (int i = 0; i < n; ++i) {
      for (int l = 0; l < len; ++l) {
        const Real* gr = o.grad.data() + ((static_cast<size_t>(i) * len) + l) * c;
        const int32_t* ar = argmax.data() + ((static_cast<size_t>(i) * len) + l) * c;
        for (int j = 0; j < c; ++j) {
          xn->grad[((static_cast<size_t>(i) * t) + ar[j]) * c + j] += gr[j];
        }
      }
    }
  });
  return TensorT<Real>(out);
}

template <typename Real>
TensorT<Real> global_max_pool(const TensorT<Real>& x) {
  detail::check(x.rank() == 3, "global_max_pool",
                "expected (N,T,C), got " + shape_str(x.shape()));
  const int n = x.dim(0), t = x.dim(1), c = x.dim(2);
  detail::check(t >= 1, "global_max_pool", "empty time axis");
  auto out = detail::result_node<Real>({n, c});
  std::vector<int32_t> argmax(static_cast<size_t>(n) * c);
  const Real* xv = x.values().data();
  for (int i = 0; i < n; ++i) {
    Real* yr = out->value.data() + static_cast<size_t>(i) * c;
    int32_t* ar = argmax.data() + static_cast<size_t>(i) * c;
    for (int j = 0; j < c; ++j) {
      Real best = xv[(static_cast<size_t>(i) * t) * c + j];
      int best_t = 0;
      for (int tt = 1; tt < t; ++tt) {
        Real v = xv[((static_cast<size_t>(i) * t) + tt) * c + j];
        if (v > best) {
          best = v;
          best_t = tt;
        }
      }
      yr[j] = best;
      ar[j] = best_t;
    }
  }
  auto* xn = x.node().get();
  detail::record(out, {&x}, [xn, argmax = std::move(argmax), n, t, c](TensorNode<Real>& o) {
    xn->ensure_grad();
    for (int i = 0; i < n; ++i) {
      const Real* gr = o.grad.data() + static_cast<size_t>(i) * c;
      const int32_t* ar = argmax.data() + static_cast<size_t>(i) * c;
      for (int j = 0; j < c; ++j) {
        xn->grad[((static_cast<size_t>(i) * t) + ar[j]) * c + j] += gr[j];
      }
    }
  });
  return TensorT<Real>(out);
}

template <typename Real>
TensorT<Real> global_avg_pool(const TensorT<Real>& x) {
  detail::check(x.rank() == 3, "global_avg_pool",
                "expected (N,T,C), got " + shape_str(x.shape()));
  const int n = x.dim(0), t = x.dim(1), c = x.dim(2);
  detail::check(t >= 1, "global_avg_pool", "empty time axis");
  auto out = detail::result_node<Real>({n, c});
  const Real* xv = x.values().data();
  const Real inv = Real(1) / Real(t);
  for (int i = 0; i < n; ++i) {
    Real* yr = out->value.data() + static_cast<size_t>(i) * c;
    for (int tt = 0; tt < t; ++tt) {
      const Real* xr = xv + ((static_cast<size_t>(i) * t) + tt) * c;
      for (int j = 0; j < c; ++j) yr[j] += xr[j];
    }
    for (int j = 0; j < c; ++j) yr[j] *= inv;
  }
  auto* xn = x.node().get();
  detail::record(out, {&x}, [xn, n, t, c, inv](TensorNode<Real>& o) {
    xn->ensure_grad();
    for (int i = 0; i < n; ++i) {
      const Real* gr = o.grad.data() + static_cast<size_t>(i) * c;
      for (int tt = 0; tt < t; ++tt) {
        Real* xg = xn->grad.data() + ((static_cast<size_t>(i) * t) + tt) * c;
        for (int j = 0; j < c; ++j) xg[j] += gr[j] * inv;
      }
    }
  });
  return TensorT<Real>(out);
}

// ---------------------------------------------------------------------------
// layer normalization
// ---------------------------------------------------------------------------

template <typename Real>
TensorT<Real> layer_norm(const TensorT<Real>& x, const TensorT<Real>& gain,
                         const TensorT<Real>& bias, Real eps = Real(1e-6)) {
  const int c = x.dim(x.rank() - 1);
  detail::check(gain.rank() == 1 && bias.rank() == 1 && gain.dim(0) == c && bias.dim(0) == c,
                "layer_norm",
                "gain/bias " + shape_str(gain.shape()) + "/" + shape_str(bias.shape()) +
                    " do not match " + shape_str(x.shape()));
  auto out = detail::result_node<Real>(x.shape());
  const auto& xv = x.values();
  const auto& gv = gain.values();
  const auto& bv = bias.values();
  const size_t rows = xv.size() / c;
  std::vector<Real> mean(rows), rstd(rows);
  for (size_t r = 0; r < rows; ++r) {
    const Real* xr = xv.data() + r * c;
    Real mu = Real(0);
    for (int j = 0; j < c; ++j) mu += xr[j];
    mu /= Real(c);
    Real var = Real(0);
    for (int j = 0; j < c; ++j) {
      Real d = xr[j] - mu;
      var += d * d;
    }
    var /= Real(c);
    Real rs = Real(1) / std::sqrt(var + eps);
    mean[r] = mu;
    rstd[r] = rs;
    Real* yr = out->value.data() + r * c;
    for (int j = 0; j < c; ++j) yr[j] = (xr[j] - mu) * rs * gv[j] + bv[j];
  }
  auto* xn = x.node().get();
  auto* gn = gain.node().get();
  auto* bn = bias.node().get();
  detail::record(out, {&x, &gain, &bias},
                 [xn, gn, bn, rows, c, mean = std::move(mean),
                  rstd = std::move(rstd)](TensorNode<Real>& o) {
    if (xn->requires_grad) xn->ensure_grad();
    if (gn->requires_grad) gn->ensure_grad();
    if (bn->requires_grad) bn->ensure_grad();
    for (size_t r = 0; r < rows; ++r) {
      const Real* xr = xn->value.data() + r * c;
      const Real* gr = o.grad.data() + r * c;
      const Real mu = mean[r], rs = rstd[r];
      if (gn->requires_grad || bn->requires_grad) {
        for (int j = 0; j < c; ++j) {
          Real xhat = (xr[j] - mu) * rs;
          if (gn->requires_grad) gn->grad[j] += gr[j] * xhat;
          if (bn->requires_grad) bn->grad[j] += gr[j];
        }
      }
      if (xn->requires_grad) {
        // dxhat = dy * gain; dx = rstd*(dxhat - mean(dxhat) - xhat*mean(dxhat*xhat))
        Real sum_d = Real(0), sum_dx = Real(0);
        for (int j = 0; j < c; ++j) {
          Real xhat = (xr[j] - mu) * rs;
          Real d = gr[j] * gn->value[j];
          sum_d += d;
          sum_dx += d * xhat;
        }
        sum_d /= Real(c);
        sum_dx /= Real(c);
        Real* xg = xn->grad.data() + r * c;
        for (int j = 0; j < c; ++j) {
          Real xhat = (xr[j] - mu) * rs;
          Real d = gr[j] * gn->value[j];
          xg[j] += rs * (d - sum_d - xhat * sum_dx);
        }
      }
    }
  });
  return TensorT<Real>(out);
}

// ---------------------------------------------------------------------------
// shape surgery
// ---------------------------------------------------------------------------

template <typename Real>
TensorT<Real> slice_last(const TensorT<Real>& x, int start, int len) {
  const int c = x.dim(x.rank() - 1);
  detail::check(start >= 0 && len >= 1 && start + len <= c, "slice_last",
                "slice [" + std::to_string(start) + ", " + std::to_string(start + len) +
                    ") outside " + shape_str(x.shape()));
  Shape out_shape = x.shape();
  out_shape.back() = len;
  auto out = detail::result_node<Real>(std::move(out_shape));
  const auto& xv = x.values();
  const size_t rows = xv.size() / c;
  for (size_t r = 0; r < rows; ++r) {
    const Real* xr = xv.data() + r * c + start;
    Real* yr = out->value.data() + r * len;
    std::copy(xr, xr + len, yr);
  }
  auto* xn = x.node().get();
  detail::record(out, {&x}, [xn, rows, c, start, len](TensorNode<Real>& o) {
    xn->ensure_grad();
    for (size_t r = 0; r < rows; ++r) {
      const Real* gr = o.grad.data() + r * len;
      Real* xg = xn->grad.data() + r * c + start;
      for (int j = 0; j < len; ++j) xg[j] += gr[j];
    }
  });
  return TensorT<Real>(out);
}

// x (N, T, E) -> (N, E), the slice at time t.
template <typename Real>
TensorT<Real> time_step(const TensorT<Real>& x, int t) {
  detail::check(x.rank() == 3, "time_step", "expected (N,T,E), got " + shape_str(x.shape()));
  const int n = x.dim(0), steps = x.dim(1), e = x.dim(2);
  detail::check(t >= 0 && t < steps, "time_step",
                "step " + std::to_string(t) + " outside " + shape_str(x.shape()));
  auto out = detail::result_node<Real>({n, e});
  const auto& xv = x.values();
  for (int i = 0; i < n; ++i) {
    const Real* xr = xv.data() + ((static_cast<size_t>(i) * steps) + t) * e;
    std::copy(xr, xr + e, out->value.data() + static_cast<size_t>(i) * e);
  }
  auto* xn = x.node().get();
  detail::record(out, {&x}, [xn, n, steps, e, t](TensorNode<Real>& o) {
    xn->ensure_grad();
    for (int i = 0; i < n; ++i) {
      const Real* gr = o.grad.data() + static_cast<size_t>(i) * e;
      Real* xg = xn->grad.data() + ((static_cast<size_t>(i) * steps) + t) * e;
      for (int j = 0; j < e; ++j) xg[j] += gr[j];
    }
  });
  return TensorT<Real>(out);
}

// steps[t] each (N, F) -> (N, T, F).
template <typename Real>
TensorT<Real> stack_time(const std::vector<TensorT<Real>>& steps) {
  detail::check(!steps.empty(), "stack_time", "no steps");
  const int n = steps[0].dim(0), f = steps[0].dim(1);
  const int t = static_cast<int>(steps.size());
  for (const auto& s : steps) {
    detail::check(s.rank() == 2 && s.dim(0) == n && s.dim(1) == f, "stack_time",
                  "step shape " + shape_str(s.shape()) + " differs from " +
                      shape_str(steps[0].shape()));
  }
  auto out = detail::result_node<Real>({n, t, f});
  for (int tt = 0; tt < t; ++tt) {
    const auto& sv = steps[tt].values();
    for (int i = 0; i < n; ++i) {
      std::copy(sv.data() + static_cast<size_t>(i) * f, sv.data() + static_cast<size_t>(i + 1) * f,
                out->value.data() + ((static_cast<size_t>(i) * t) + tt) * f);
    }
  }
  bool any = false;
  std::vector<TensorNode<Real>*> nodes(t);
  for (int tt = 0; tt < t; ++tt) {
    nodes[tt] = steps[tt].node().get();
    any = any || nodes[tt]->requires_grad;
  }
  if (grad_enabled() && any) {
    out->requires_grad = true;
    for (const auto& s : steps) out->parents.push_back(s.node());
    out->backward = [nodes = std::move(nodes), n, t, f](TensorNode<Real>& o) {
      for (int tt = 0; tt < t; ++tt) {
        if (!nodes[tt]->requires_grad) continue;
        nodes[tt]->ensure_grad();
        for (int i = 0; i < n; ++i) {
          const Real* gr = o.grad.data() + ((static_cast<size_t>(i) * t) + tt) * f;
          Real* sg = nodes[tt]->grad.data() + static_cast<size_t>(i) * f;
          for (int j = 0; j < f; ++j) sg[j] += gr[j];
        }
      }
    };
  }
  return TensorT<Real>(out);
}

// Concatenate on the last axis; leading dims must match.
template <typename Real>
TensorT<Real> concat_last(const TensorT<Real>& a, const TensorT<Real>& b) {
  detail::check(a.rank() == b.rank(), "concat_last",
                "rank mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  for (int i = 0; i + 1 < a.rank(); ++i) {
    detail::check(a.dim(i) == b.dim(i), "concat_last",
                  "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const int ca = a.dim(a.rank() - 1), cb = b.dim(b.rank() - 1);
  Shape out_shape = a.shape();
  out_shape.back() = ca + cb;
  auto out = detail::result_node<Real>(std::move(out_shape));
  const size_t rows = a.values().size() / ca;
  for (size_t r = 0; r < rows; ++r) {
    Real* yr = out->value.data() + r * (ca + cb);
    std::copy(a.values().data() + r * ca, a.values().data() + (r + 1) * ca, yr);
    std::copy(b.values().data() + r * cb, b.values().data() + (r + 1) * cb, yr + ca);
  }
  auto* an = a.node().get();
  auto* bn = b.node().get();
  detail::record(out, {&a, &b}, [an, bn, rows, ca, cb](TensorNode<Real>& o) {
    for (size_t r = 0; r < rows; ++r) {
      const Real* gr = o.grad.data() + r * (ca + cb);
      if (an->requires_grad) {
        an->ensure_grad();
        Real* ag = an->grad.data() + r * ca;
        for (int j = 0; j < ca; ++j) ag[j] += gr[j];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        Real* bg = bn->grad.data() + r * cb;
        for (int j = 0; j < cb; ++j) bg[j] += gr[j + ca];
      }
    }
  });
  return TensorT<Real>(out);
}

// (..., 1) -> (...).
template <typename Real>
TensorT<Real> squeeze_last(const TensorT<Real>& x) {
  detail::check(x.rank() >= 2 && x.dim(x.rank() - 1) == 1, "squeeze_last",
                "last axis must be 1, got " + shape_str(x.shape()));
  Shape out_shape = x.shape();
  out_shape.pop_back();
  auto out = detail::result_node<Real>(std::move(out_shape));
  out->value = x.values();
  auto* xn = x.node().get();
  detail::record(out, {&x}, [xn](TensorNode<Real>& o) {
    xn->ensure_grad();
    for (size_t i = 0; i < o.grad.size(); ++i) xn->grad[i] += o.grad[i];
  });
  return TensorT<Real>(out);
}

// ---------------------------------------------------------------------------
// attention building blocks
// ---------------------------------------------------------------------------

// h (N, T, D) pooled with per-step weights a (N, T): out[n] = sum_t a[n,t] h[n,t].
template <typename Real>
TensorT<Real> weighted_sum_time(const TensorT<Real>& h, const TensorT<Real>& a) {
  detail::check(h.rank() == 3 && a.rank() == 2 && h.dim(0) == a.dim(0) && h.dim(1) == a.dim(1),
                "weighted_sum_time",
                "incompatible shapes " + shape_str(h.shape()) + " and " + shape_str(a.shape()));
  const int n = h.dim(0), t = h.dim(1), d = h.dim(2);
  auto out = detail::result_node<Real>({n, d});
  const Real* hv = h.values().data();
  const Real* av = a.values().data();
  for (int i = 0; i < n; ++i) {
    Real* yr = out->value.data() + static_cast<size_t>(i) * d;
    for (int tt = 0; tt < t; ++tt) {
      const Real w = av[static_cast<size_t>(i) * t + tt];
      const Real* hr = hv + ((static_cast<size_t>(i) * t) + tt) * d;
      for (int j = 0; j < d; ++j) yr[j] += w * hr[j];
    }
  }
  auto* hn = h.node().get();
  auto* an = a.node().get();
  detail::record(out, {&h, &a}, [hn, an, n, t, d](TensorNode<Real>& o) {
    if (hn->requires_grad) hn->ensure_grad();
    if (an->requires_grad) an->ensure_grad();
    for (int i = 0; i < n; ++i) {
      const Real* gr = o.grad.data() + static_cast<size_t>(i) * d;
      for (int tt = 0; tt < t; ++tt) {
        const size_t hoff = ((static_cast<size_t>(i) * t) + tt) * d;
        if (hn->requires_grad) {
          const Real w = an->value[static_cast<size_t>(i) * t + tt];
          for (int j = 0; j < d; ++j) hn->grad[hoff + j] += w * gr[j];
        }
        if (an->requires_grad) {
          Real acc = Real(0);
          for (int j = 0; j < d; ++j) acc += hn->value[hoff + j] * gr[j];
          an->grad[static_cast<size_t>(i) * t + tt] += acc;
        }
      }
    }
  });
  return TensorT<Real>(out);
}

// Scaled dot-product scores per head: q, k (N, T, D) -> (N, H, T, T) with
// scores[n,h,t,s] = q_h[n,t] . k_h[n,s] / sqrt(D/H).
template <typename Real>
TensorT<Real> attention_scores(const TensorT<Real>& q, const TensorT<Real>& k, int heads) {
  detail::check(q.rank() == 3 && q.shape() == k.shape(), "attention_scores",
                "incompatible shapes " + shape_str(q.shape()) + " and " + shape_str(k.shape()));
  const int n = q.dim(0), t = q.dim(1), d = q.dim(2);
  detail::check(heads >= 1 && d % heads == 0, "attention_scores",
                "feature dim " + std::to_string(d) + " not divisible by " +
                    std::to_string(heads) + " heads");
  const int dh = d / heads;
  const Real scl = Real(1) / std::sqrt(Real(dh));
  auto out = detail::result_node<Real>({n, heads, t, t});
  const Real* qv = q.values().data();
  const Real* kv = k.values().data();
#pragma omp parallel for schedule(static) if (n * heads >= 4)
  for (int nh = 0; nh < n * heads; ++nh) {
    const int i = nh / heads, h = nh % heads;
    for (int tt = 0; tt < t; ++tt) {
      const Real* qr = qv + ((static_cast<size_t>(i) * t) + tt) * d + h * dh;
      Real* yr = out->value.data() + (((static_cast<size_t>(i) * heads) + h) * t + tt) * t;
      for (int s = 0; s < t; ++s) {
        const Real* kr = kv + ((static_cast<size_t>(i) * t) + s) * d + h * dh;
        Real acc = Real(0);
        for (int j = 0; j < dh; ++j) acc += qr[j] * kr[j];
        yr[s] = acc * scl;
      }
    }
  }
  auto* qn = q.node().get();
  auto* kn = k.node().get();
  detail::record(out, {&q, &k}, [qn, kn, n, t, d, heads, dh, scl](TensorNode<Real>& o) {
    if (qn->requires_grad) qn->ensure_grad();
    if (kn->requires_grad) kn->ensure_grad();
    for (int i = 0; i < n; ++i) {
      for (int h = 0; h < heads; ++h) {
        for (int tt = 0; tt < t; ++tt) {
          const Real* gr = o.grad.data() + (((static_cast<size_t>(i) * heads) + h) * t + tt) * t;
          const size_t qoff = ((static_cast<size_t>(i) * t) + tt) * d + h * dh;
          for (int s = 0; s < t; ++s) {
            const Real g = gr[s] * scl;
            if (g == Real(0)) continue;
            const size_t koff = ((static_cast<size_t>(i) * t) + s) * d + h * dh;
            if (qn->requires_grad) {
              for (int j = 0; j < dh; ++j) qn->grad[qoff + j] += g * kn->value[koff + j];
            }
            if (kn->requires_grad) {
              for (int j = 0; j < dh; ++j) kn->grad[koff + j] += g * qn->value[qoff + j];
            }
          }
        }
      }
    }
  });
  return TensorT<Real>(out);
}

// weights (N, H, T, T) applied to v (N, T, D), heads re-merged on the feature
// axis: out[n,t, h*dh+j] = sum_s weights[n,h,t,s] v[n,s, h*dh+j].
template <typename Real>
TensorT<Real> attention_combine(const TensorT<Real>& weights, const TensorT<Real>& v, int heads) {
  detail::check(weights.rank() == 4 && v.rank() == 3, "attention_combine",
                "incompatible shapes " + shape_str(weights.shape()) + " and " +
                    shape_str(v.shape()));
  const int n = v.dim(0), t = v.dim(1), d = v.dim(2);
  detail::check(weights.dim(0) == n && weights.dim(1) == heads && weights.dim(2) == t &&
                    weights.dim(3) == t && d % heads == 0,
                "attention_combine",
                "incompatible shapes " + shape_str(weights.shape()) + " and " +
                    shape_str(v.shape()));
  const int dh = d / heads;
  auto out = detail::result_node<Real>({n, t, d});
  const Real* wv = weights.values().data();
  const Real* vv = v.values().data();
#pragma omp parallel for schedule(static) if (n * heads >= 4)
  for (int nh = 0; nh < n * heads; ++nh) {
    const int i = nh / heads, h = nh % heads;
    for (int tt = 0; tt < t; ++tt) {
      const Real* wr = wv + (((static_cast<size_t>(i) * heads) + h) * t + tt) * t;
      Real* yr = out->value.data() + ((static_cast<size_t>(i) * t) + tt) * d + h * dh;
      for (int s = 0; s < t; ++s) {
        const Real w = wr[s];
        if (w == Real(0)) continue;
        const Real* vr = vv + ((static_cast<size_t>(i) * t) + s) * d + h * dh;
        for (int j = 0; j < dh; ++j) yr[j] += w * vr[j];
      }
    }
  }
  auto* wn = weights.node().get();
  auto* vn = v.node().get();
  detail::record(out, {&weights, &v}, [wn, vn, n, t, d, heads, dh](TensorNode<Real>& o) {
    if (wn->requires_grad) wn->ensure_grad();
    if (vn->requires_grad) vn->ensure_grad();
    for (int i = 0; i < n; ++i) {
      for (int h = 0; h < heads; ++h) {
        for (int tt = 0; tt < t; ++tt) {
          const Real* gr = o.grad.data() + ((static_cast<size_t>(i) * t) + tt) * d + h * dh;
          const size_t woff = (((static_cast<size_t>(i) * heads) + h) * t + tt) * t;
          for (int s = 0; s < t; ++s) {
            const size_t voff = ((static_cast<size_t>(i) * t) + s) * d + h * dh;
            if (wn->requires_grad) {
              Real acc = Real(0);
              for (int j = 0; j < dh; ++j) acc += gr[j] * vn->value[voff + j];
              wn->grad[woff + s] += acc;
            }
            if (vn->requires_grad) {
              const Real w = wn->value[woff + s];
              if (w == Real(0)) continue;
              for (int j = 0; j < dh; ++j) vn->grad[voff + j] += w * gr[j];
            }
          }
        }
      }
    }
  });
  return TensorT<Real>(out);
}

// ---------------------------------------------------------------------------
// reductions and loss
// ---------------------------------------------------------------------------

template <typename Real>
TensorT<Real> sum_all(const TensorT<Real>& x) {
  auto out = detail::result_node<Real>({1});
  Real acc = Real(0);
  for (Real v : x.values()) acc += v;
  out->value[0] = acc;
  auto* xn = x.node().get();
  detail::record(out, {&x}, [xn](TensorNode<Real>& o) {
    xn->ensure_grad();
    const Real g = o.grad[0];
    for (size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += g;
  });
  return TensorT<Real>(out);
}

// sum_i w_i x_i; used to scalarize outputs in tests.
template <typename Real>
TensorT<Real> weighted_sum_all(const TensorT<Real>& x, std::vector<Real> w) {
  detail::check(w.size() == x.values().size(), "weighted_sum_all", "weight count mismatch");
  auto out = detail::result_node<Real>({1});
  Real acc = Real(0);
  for (size_t i = 0; i < w.size(); ++i) acc += w[i] * x.values()[i];
  out->value[0] = acc;
  auto* xn = x.node().get();
  detail::record(out, {&x}, [xn, w = std::move(w)](TensorNode<Real>& o) {
    xn->ensure_grad();
    const Real g = o.grad[0];
    for (size_t i = 0; i < w.size(); ++i) xn->grad[i] += g * w[i];
  });
  return TensorT<Real>(out);
}

inline constexpr double kProbClip = 1e-7;

// Mean over rows of -sum_c onehot[c] * log(clip(probs[c])). Probabilities are
// clipped to [1e-7, 1-1e-7] before the log.
template <typename Real>
TensorT<Real> categorical_crossentropy(const TensorT<Real>& probs, const TensorT<Real>& onehot) {
  detail::check(probs.rank() == 2 && probs.shape() == onehot.shape(), "categorical_crossentropy",
                "shape mismatch " + shape_str(probs.shape()) + " vs " +
                    shape_str(onehot.shape()));
  const int n = probs.dim(0), c = probs.dim(1);
  detail::check(n >= 1, "categorical_crossentropy", "empty batch");
  const Real lo = Real(kProbClip), hi = Real(1) - Real(kProbClip);
  auto out = detail::result_node<Real>({1});
  Real acc = Real(0);
  for (int i = 0; i < n; ++i) {
    const Real* pr = probs.values().data() + static_cast<size_t>(i) * c;
    const Real* yr = onehot.values().data() + static_cast<size_t>(i) * c;
    for (int j = 0; j < c; ++j) {
      if (yr[j] == Real(0)) continue;
      acc -= yr[j] * std::log(std::clamp(pr[j], lo, hi));
    }
  }
  out->value[0] = acc / Real(n);
  auto* pn = probs.node().get();
  auto* yn = onehot.node().get();
  detail::record(out, {&probs, &onehot}, [pn, yn, n, c, lo, hi](TensorNode<Real>& o) {
    if (!pn->requires_grad) return;
    pn->ensure_grad();
    const Real g = o.grad[0] / Real(n);
    for (int i = 0; i < n; ++i) {
      const Real* pr = pn->value.data() + static_cast<size_t>(i) * c;
      const Real* yr = yn->value.data() + static_cast<size_t>(i) * c;
      Real* pg = pn->grad.data() + static_cast<size_t>(i) * c;
      for (int j = 0; j < c; ++j) {
        if (yr[j] == Real(0)) continue;
        if (pr[j] > lo && pr[j] < hi) pg[j] -= g * yr[j] / pr[j];
      }
    }
  });
  return TensorT<Real>(out);
}

}  // namespace claimsift
