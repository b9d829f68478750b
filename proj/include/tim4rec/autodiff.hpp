#pragma once

#include <functional>
#include <vector>

#include "tim4rec/tensor.hpp"

namespace tim4rec {

class Tape;

// Handle to a node on a tape: the tape plus a stable index.
struct Var {
  Tape* tape = nullptr;
  int64_t node = -1;

  bool valid() const { return tape != nullptr && node >= 0; }
  const Tensor& val() const;
};

// Reverse-mode autodiff tape. Nodes are appended in evaluation order, so the
// creation order is already a topological order; backward() walks it once in
// reverse. Each node owns its value, a lazily-allocated gradient buffer, and a
// pull function that routes the node's gradient to its parents (one
// vector-Jacobian product per parent). Gradients accumulate by addition, so
// fan-out is handled for free; nodes never reached from the loss keep a zero
// gradient.
class Tape {
 public:
  // Gradient-routing callback: receives this node's accumulated gradient.
  using PullFn = std::function<void(Tape&, const Tensor& grad)>;

  struct Node {
    Tensor value;
    Tensor grad;  // empty until touched by backward()
    bool needs_grad = false;
    PullFn pull;  // empty for leaves and grad-free nodes
  };

  // Installs a leaf holding `value`. Parameters set needs_grad; plain inputs
  // and constants do not.
  Var leaf(Tensor value, bool needs_grad) {
    nodes_.push_back(Node{std::move(value), Tensor(), needs_grad, nullptr});
    return Var{this, static_cast<int64_t>(nodes_.size()) - 1};
  }

  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // Installs an interior node. Ops call this, then attach the pull function
  // with set_pull so the closure can reference the node's own Var (useful when
  // a VJP reuses the forward output, e.g. exp or softmax).
  Var emit(Tensor value, bool needs_grad) {
    nodes_.push_back(Node{std::move(value), Tensor(), needs_grad, nullptr});
    return Var{this, static_cast<int64_t>(nodes_.size()) - 1};
  }

  void set_pull(Var v, PullFn fn) { node(v).pull = std::move(fn); }

  const Tensor& value(Var v) const { return node(v).value; }

  bool needs(Var v) const { return node(v).needs_grad; }

  // Gradient of a node after backward(). Zero-shaped like the value if the
  // node was never reached.
  const Tensor& grad(Var v) {
    Node& n = node(v);
    if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.shape());
    return n.grad;
  }

  // Direct handle on a parent's gradient buffer for scatter-style VJPs
  // (embedding, slicing) that would otherwise materialize a full-size zero
  // tensor just to add a few rows. Null when the parent takes no gradient.
  Tensor* grad_target(Var parent) {
    Node& n = node(parent);
    if (!n.needs_grad) return nullptr;
    if (n.grad.empty()) n.grad = Tensor(n.value.shape());
    return &n.grad;
  }

  // Accumulates `delta` into a parent's gradient buffer. No-op for nodes that
  // do not require gradients, so pull functions may call it unconditionally —
  // though they should test needs() first to skip computing the delta at all.
  void accumulate(Var parent, const Tensor& delta) {
    Tensor* g = grad_target(parent);
    if (!g) return;
    if (!g->same_shape(delta)) throw ShapeError("tape: gradient shape mismatch");
    g->vec() += delta.vec();
  }

  // Reverse sweep from a scalar loss. Every parameter reachable from the loss
  // receives its accumulated gradient; everything else stays zero.
  void backward(Var loss) {
    if (loss.tape != this) throw ContractError("tape: backward on foreign var");
    Node& ln = node(loss);
    if (ln.value.size() != 1) throw ShapeError("tape: backward needs a scalar loss");
    if (ln.grad.empty()) ln.grad = Tensor(ln.value.shape());
    ln.grad[0] += 1.0;
    for (int64_t i = loss.node; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (!n.pull || n.grad.empty()) continue;  // leaf, grad-free, or unreached
      n.pull(*this, n.grad);
    }
  }

  size_t size() const { return nodes_.size(); }

  void clear() { nodes_.clear(); }

 private:
  Node& node(Var v) {
    if (v.tape != this || v.node < 0 || v.node >= static_cast<int64_t>(nodes_.size()))
      throw ContractError("tape: invalid var");
    return nodes_[static_cast<size_t>(v.node)];
  }
  const Node& node(Var v) const { return const_cast<Tape*>(this)->node(v); }

  std::vector<Node> nodes_;
};

inline const Tensor& Var::val() const { return tape->value(*this); }

}  // namespace tim4rec
