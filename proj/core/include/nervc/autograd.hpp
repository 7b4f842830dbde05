// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NERVC_AUTOGRAD_HPP
#define NERVC_AUTOGRAD_HPP

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "nervc/errors.hpp"
#include "nervc/tensor.hpp"

// Reverse-mode autodiff over TensorT. A ValueT is a handle on a graph node;
// ops build new nodes whose closures scatter gradients back into their
// parents. Graphs are throwaway: build, backward, drop. Parameters are leaf
// nodes that outlive the graph, and their gradients accumulate across
// backward calls until zero_grad.

namespace nervc {

template <typename S>
struct NodeT {
  TensorT<S> out;
  TensorT<S> grad;  // allocated on demand during backward
  bool is_leaf = false;
  bool requires_grad = false;  // a parameter, or downstream of one
  std::vector<std::shared_ptr<NodeT<S>>> parents;
  std::function<void(NodeT<S>&)> backward_fn;
  const char* op = "";
};

template <typename S>
class ValueT {
public:
  ValueT() = default;
  explicit ValueT(std::shared_ptr<NodeT<S>> n) : n_(std::move(n)) {}

  static ValueT constant(TensorT<S> t) {
    auto n = std::make_shared<NodeT<S>>();
    n->out = std::move(t);
    n->is_leaf = true;
    n->op = "const";
    return ValueT(std::move(n));
  }

  static ValueT parameter(TensorT<S> t) {
    auto n = std::make_shared<NodeT<S>>();
    n->grad = TensorT<S>(t.shape());
    n->out = std::move(t);
    n->is_leaf = true;
    n->requires_grad = true;
    n->op = "param";
    return ValueT(std::move(n));
  }

  bool defined() const { return static_cast<bool>(n_); }
  const std::shared_ptr<NodeT<S>>& node() const { return n_; }

  const TensorT<S>& value() const { return n_->out; }
  TensorT<S>& value() { return n_->out; }
  const TensorT<S>& grad() const { return n_->grad; }
  TensorT<S>& grad() { return n_->grad; }
  bool requires_grad() const { return n_->requires_grad; }

  void zero_grad() {
    if (n_->grad.empty()) n_->grad = TensorT<S>(n_->out.shape());
    n_->grad.fill(S(0));
  }

  // Scalar payload of a size-1 value.
  double item() const {
    if (n_->out.size() != 1) throw usage_error("item() on non-scalar value");
    return static_cast<double>(n_->out[0]);
  }

private:
  std::shared_ptr<NodeT<S>> n_;
};

namespace ag {

template <typename S>
inline ValueT<S> make_op(const char* op, TensorT<S> out,
                         std::vector<ValueT<S>> parents,
                         std::function<void(NodeT<S>&)> bwd) {
  auto n = std::make_shared<NodeT<S>>();
  n->op = op;
  n->out = std::move(out);
  bool rg = false;
  n->parents.reserve(parents.size());
  for (const auto& p : parents) {
    if (!p.defined()) throw usage_error("op applied to an empty value");
    n->parents.push_back(p.node());
    rg = rg || p.node()->requires_grad;
  }
  n->requires_grad = rg;
  if (rg) n->backward_fn = std::move(bwd);
  return ValueT<S>(std::move(n));
}

// Gradient accumulation guard: constants are skipped, everything else was
// visited by the traversal and already carries a zeroed (or live) buffer.
template <typename S>
inline TensorT<S>* grad_sink(const std::shared_ptr<NodeT<S>>& p) {
  return p->requires_grad ? &p->grad : nullptr;
}

}  // namespace ag

// Run reverse-mode through everything reachable from `loss`, which must be a
// scalar. Interior gradients are freshly zeroed per call; leaf parameters
// keep accumulating until their owner calls zero_grad.
template <typename S>
void backward(const ValueT<S>& loss) {
  if (!loss.defined()) throw usage_error("backward on an empty value");
  if (loss.value().size() != 1) throw usage_error("backward needs a scalar loss");
  NodeT<S>* root = loss.node().get();
  if (!root->requires_grad) return;  // nothing trainable feeds this value

  // Post-order DFS; `order` lists ancestors before descendants.
  std::vector<NodeT<S>*> order;
  std::unordered_set<const NodeT<S>*> pushed;
  std::vector<std::pair<NodeT<S>*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  pushed.insert(root);
  while (!stack.empty()) {
    auto& fr = stack.back();
    NodeT<S>* n = fr.first;
    if (fr.second < n->parents.size()) {
      NodeT<S>* p = n->parents[fr.second++].get();
      if (p->requires_grad && pushed.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (NodeT<S>* n : order) {
    if (n->is_leaf) {
      if (n->grad.empty()) n->grad = TensorT<S>(n->out.shape());
    } else {
      n->grad = TensorT<S>(n->out.shape());
    }
  }
  root->grad[0] = S(1);

  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

// ---------------------------------------------------------------------------
// Elementwise and reduction ops.

namespace ag {

template <typename S>
inline void check_same_shape(const ValueT<S>& a, const ValueT<S>& b, const char* op) {
  if (!a.value().same_shape(b.value()))
    throw input_error(std::string(op) + ": shape mismatch " + a.value().shape_str() +
                      " vs " + b.value().shape_str());
}

}  // namespace ag

template <typename S>
ValueT<S> add(const ValueT<S>& a, const ValueT<S>& b) {
  ag::check_same_shape(a, b, "add");
  TensorT<S> out(a.value().shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return ag::make_op<S>("add", std::move(out), {a, b}, [](NodeT<S>& self) {
    for (int pi = 0; pi < 2; ++pi)
      if (auto* g = ag::grad_sink(self.parents[pi]))
        for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i];
  });
}

template <typename S>
ValueT<S> sub(const ValueT<S>& a, const ValueT<S>& b) {
  ag::check_same_shape(a, b, "sub");
  TensorT<S> out(a.value().shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return ag::make_op<S>("sub", std::move(out), {a, b}, [](NodeT<S>& self) {
    if (auto* g = ag::grad_sink(self.parents[0]))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i];
    if (auto* g = ag::grad_sink(self.parents[1]))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] -= self.grad[i];
  });
}

template <typename S>
ValueT<S> mul(const ValueT<S>& a, const ValueT<S>& b) {
  ag::check_same_shape(a, b, "mul");
  TensorT<S> out(a.value().shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return ag::make_op<S>("mul", std::move(out), {a, b}, [](NodeT<S>& self) {
    const TensorT<S>& av = self.parents[0]->out;
    const TensorT<S>& bv = self.parents[1]->out;
    if (auto* g = ag::grad_sink(self.parents[0]))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i] * bv[i];
    if (auto* g = ag::grad_sink(self.parents[1]))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i] * av[i];
  });
}

template <typename S>
ValueT<S> div(const ValueT<S>& a, const ValueT<S>& b) {
  ag::check_same_shape(a, b, "div");
  TensorT<S> out(a.value().shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] / b.value()[i];
  return ag::make_op<S>("div", std::move(out), {a, b}, [](NodeT<S>& self) {
    const TensorT<S>& bv = self.parents[1]->out;
    const TensorT<S>& y = self.out;
    if (auto* g = ag::grad_sink(self.parents[0]))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i] / bv[i];
    if (auto* g = ag::grad_sink(self.parents[1]))
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        (*g)[i] -= self.grad[i] * y[i] / bv[i];
  });
}

// y = c * a for a plain scalar c.
template <typename S>
ValueT<S> scale(const ValueT<S>& a, double c) {
  TensorT<S> out(a.value().shape());
  const S cs = static_cast<S>(c);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cs * a.value()[i];
  return ag::make_op<S>("scale", std::move(out), {a}, [cs](NodeT<S>& self) {
    if (auto* g = ag::grad_sink(self.parents[0]))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += cs * self.grad[i];
  });
}

// y = a + c.
template <typename S>
ValueT<S> shift(const ValueT<S>& a, double c) {
  TensorT<S> out(a.value().shape());
  const S cs = static_cast<S>(c);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + cs;
  return ag::make_op<S>("shift", std::move(out), {a}, [](NodeT<S>& self) {
    if (auto* g = ag::grad_sink(self.parents[0]))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i];
  });
}

template <typename S>
ValueT<S> abs(const ValueT<S>& a) {
  TensorT<S> out(a.value().shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.value()[i] < S(0) ? -a.value()[i] : a.value()[i];
  return ag::make_op<S>("abs", std::move(out), {a}, [](NodeT<S>& self) {
    const TensorT<S>& av = self.parents[0]->out;
    if (auto* g = ag::grad_sink(self.parents[0]))
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        if (av[i] > S(0))
          (*g)[i] += self.grad[i];
        else if (av[i] < S(0))
          (*g)[i] -= self.grad[i];
      }
  });
}

template <typename S>
ValueT<S> sum(const ValueT<S>& a) {
  S acc = S(0);
  for (std::size_t i = 0; i < a.value().size(); ++i) acc += a.value()[i];
  TensorT<S> out({1});
  out[0] = acc;
  return ag::make_op<S>("sum", std::move(out), {a}, [](NodeT<S>& self) {
    if (auto* g = ag::grad_sink(self.parents[0])) {
      const S gy = self.grad[0];
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += gy;
    }
  });
}

template <typename S>
ValueT<S> mean(const ValueT<S>& a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw usage_error("mean of an empty value");
  S acc = S(0);
  for (std::size_t i = 0; i < n; ++i) acc += a.value()[i];
  TensorT<S> out({1});
  out[0] = acc / static_cast<S>(n);
  return ag::make_op<S>("mean", std::move(out), {a}, [n](NodeT<S>& self) {
    if (auto* g = ag::grad_sink(self.parents[0])) {
      const S gy = self.grad[0] / static_cast<S>(n);
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += gy;
    }
  });
}

template <typename S>
ValueT<S> reshape(const ValueT<S>& a, std::vector<std::size_t> shape) {
  TensorT<S> out = a.value().reshaped(std::move(shape));
  return ag::make_op<S>("reshape", std::move(out), {a}, [](NodeT<S>& self) {
    if (auto* g = ag::grad_sink(self.parents[0]))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i];
  });
}

// Cuts the graph: same data, no parents.
template <typename S>
ValueT<S> detach(const ValueT<S>& a) {
  return ValueT<S>::constant(a.value());
}

}  // namespace nervc

#endif  // NERVC_AUTOGRAD_HPP
