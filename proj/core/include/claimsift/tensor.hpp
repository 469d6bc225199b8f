#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "claimsift/error.hpp"

namespace claimsift {

using Shape = std::vector<int>;

inline long long numel(const Shape& shape) {
  long long n = 1;
  for (int d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

// Integer id matrix (token sequences, label codes). Plain data, never on the
// tape.
struct IdMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int32_t> ids;  // row-major, rows*cols entries

  IdMatrix() = default;
  IdMatrix(int r, int c) : rows(r), cols(c), ids(static_cast<size_t>(r) * c, 0) {}

  int32_t at(int r, int c) const { return ids[static_cast<size_t>(r) * cols + c]; }
  int32_t& at(int r, int c) { return ids[static_cast<size_t>(r) * cols + c]; }
  const int32_t* row(int r) const { return ids.data() + static_cast<size_t>(r) * cols; }
  int32_t* row(int r) { return ids.data() + static_cast<size_t>(r) * cols; }
};

namespace detail {
inline thread_local bool g_grad_enabled = true;
}

inline bool grad_enabled() { return detail::g_grad_enabled; }

// Disables tape recording for the lifetime of the guard (inference paths).
class NoGradGuard {
 public:
  NoGradGuard() : prev_(detail::g_grad_enabled) { detail::g_grad_enabled = false; }
  ~NoGradGuard() { detail::g_grad_enabled = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <typename Real>
struct TensorNode {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;  // empty until first backward touches this node
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward;  // accumulates into parent grads

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), Real(0));
  }
};

// Dense n-dimensional tensor with reverse-mode autodiff. Value-semantics
// handle sharing one tape node; ops in ops.hpp build the graph.
template <typename Real>
class TensorT {
 public:
  using Node = TensorNode<Real>;

  TensorT() = default;
  explicit TensorT(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static TensorT zeros(Shape shape) {
    auto n = std::make_shared<Node>();
    long long count = numel(shape);
    n->shape = std::move(shape);
    n->value.assign(static_cast<size_t>(count), Real(0));
    return TensorT(std::move(n));
  }

  static TensorT full(Shape shape, Real v) {
    TensorT t = zeros(std::move(shape));
    std::fill(t.values().begin(), t.values().end(), v);
    return t;
  }

  static TensorT from_values(Shape shape, std::vector<Real> values) {
    if (static_cast<long long>(values.size()) != numel(shape)) {
      throw Error("tensor: value count " + std::to_string(values.size()) +
                  " does not match shape " + shape_str(shape));
    }
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(values);
    return TensorT(std::move(n));
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[i]; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  long long size() const { return static_cast<long long>(node_->value.size()); }

  std::vector<Real>& values() { return node_->value; }
  const std::vector<Real>& values() const { return node_->value; }

  Real item() const {
    if (size() != 1) {
      throw Error("tensor: item() on non-scalar of shape " + shape_str(shape()));
    }
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool b) { node_->requires_grad = b; }

  bool has_grad() const { return !node_->grad.empty(); }
  std::vector<Real>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  const std::vector<Real>& grad() const {
    if (!has_grad()) throw Error("tensor: gradient not populated");
    return node_->grad;
  }
  void zero_grad() {
    if (has_grad()) std::fill(node_->grad.begin(), node_->grad.end(), Real(0));
  }

  // Reverse-mode sweep from this scalar. Gradients accumulate additively, so
  // callers zero parameter grads between steps.
  void backward() const {
    if (size() != 1) {
      throw Error("backward: loss must be scalar, got shape " + shape_str(shape()));
    }
    std::vector<Node*> order = topo_order();
    node_->ensure_grad();
    node_->grad[0] = Real(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      // A node with no incoming gradient contributes nothing (e.g. a final
      // cell state no consumer reads).
      if ((*it)->backward && !(*it)->grad.empty()) (*it)->backward(**it);
    }
  }

  std::shared_ptr<Node> node() const { return node_; }

 private:
  // Iterative post-order DFS; recursion depth over a 100-step LSTM tape would
  // be in the thousands.
  std::vector<Node*> topo_order() const {
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        Node* parent = node->parents[next++].get();
        if (visited.insert(parent).second) stack.emplace_back(parent, 0);
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
    return order;
  }

  std::shared_ptr<Node> node_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

}  // namespace claimsift
