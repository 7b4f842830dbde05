// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NERVC_NN_OPS_HPP
#define NERVC_NN_OPS_HPP

#include <vector>

#include "nervc/autograd.hpp"
#include "nervc/nn_kernels.hpp"

// Graph-building wrappers around the raw kernels.

namespace nervc {

template <typename S>
ValueT<S> gelu(const ValueT<S>& a) {
  TensorT<S> out(a.value().shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = kernels::gelu_fwd(a.value()[i]);
  return ag::make_op<S>("gelu", std::move(out), {a}, [](NodeT<S>& self) {
    const TensorT<S>& av = self.parents[0]->out;
    if (auto* g = ag::grad_sink(self.parents[0]))
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        (*g)[i] += self.grad[i] * kernels::gelu_grad(av[i]);
  });
}

template <typename S>
ValueT<S> sigmoid(const ValueT<S>& a) {
  TensorT<S> out(a.value().shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = kernels::sigmoid_fwd(a.value()[i]);
  return ag::make_op<S>("sigmoid", std::move(out), {a}, [](NodeT<S>& self) {
    const TensorT<S>& y = self.out;
    if (auto* g = ag::grad_sink(self.parents[0]))
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        (*g)[i] += self.grad[i] * y[i] * (S(1) - y[i]);
  });
}

template <typename S>
ValueT<S> linear(const ValueT<S>& x, const ValueT<S>& w, const ValueT<S>& b) {
  TensorT<S> out;
  kernels::linear_forward(x.value(), w.value(), b.value(), out);
  return ag::make_op<S>("linear", std::move(out), {x, w, b}, [](NodeT<S>& self) {
    kernels::linear_backward(self.parents[0]->out, self.parents[1]->out, self.grad,
                             ag::grad_sink(self.parents[0]),
                             ag::grad_sink(self.parents[1]),
                             ag::grad_sink(self.parents[2]));
  });
}

template <typename S>
ValueT<S> conv2d(const ValueT<S>& x, const ValueT<S>& w, const ValueT<S>& b) {
  TensorT<S> out;
  kernels::conv2d_forward(x.value(), w.value(), b.value(), out);
  return ag::make_op<S>("conv2d", std::move(out), {x, w, b}, [](NodeT<S>& self) {
    kernels::conv2d_backward(self.parents[0]->out, self.parents[1]->out, self.grad,
                             ag::grad_sink(self.parents[0]),
                             ag::grad_sink(self.parents[1]),
                             ag::grad_sink(self.parents[2]));
  });
}

template <typename S>
ValueT<S> pixel_shuffle(const ValueT<S>& x, std::size_t s) {
  TensorT<S> out;
  kernels::pixel_shuffle_forward(x.value(), s, out);
  return ag::make_op<S>("pixel_shuffle", std::move(out), {x}, [s](NodeT<S>& self) {
    if (auto* g = ag::grad_sink(self.parents[0]))
      kernels::pixel_shuffle_adjoint(self.grad, s, *g);
  });
}

template <typename S>
ValueT<S> gaussian_blur(const ValueT<S>& x, double sigma, std::size_t radius) {
  auto taps = kernels::gaussian_taps<S>(sigma, radius);
  TensorT<S> out;
  kernels::blur_forward(x.value(), taps, out);
  return ag::make_op<S>("gaussian_blur", std::move(out), {x},
                        [taps = std::move(taps)](NodeT<S>& self) {
                          if (auto* g = ag::grad_sink(self.parents[0]))
                            kernels::blur_adjoint(self.grad, taps, *g);
                        });
}

// Per-pixel reweighting by a fixed [H,W] map, broadcast across channels.
// The map is data, not a graph node; nothing flows back into it.
template <typename S>
ValueT<S> weight_map_mul(const ValueT<S>& x, const TensorT<S>& map) {
  const auto& xs = x.value().shape();
  if (xs.size() != 3 || map.rank() != 2 || map.extent(0) != xs[1] || map.extent(1) != xs[2])
    throw input_error("weight_map_mul expects x [C,H,W] and map [H,W]");
  const std::size_t c = xs[0], hw = map.size();
  TensorT<S> out(xs);
  for (std::size_t ci = 0; ci < c; ++ci)
    for (std::size_t i = 0; i < hw; ++i)
      out[ci * hw + i] = x.value()[ci * hw + i] * map[i];
  return ag::make_op<S>("weight_map_mul", std::move(out), {x},
                        [map, c, hw](NodeT<S>& self) {
                          if (auto* g = ag::grad_sink(self.parents[0]))
                            for (std::size_t ci = 0; ci < c; ++ci)
                              for (std::size_t i = 0; i < hw; ++i)
                                (*g)[ci * hw + i] += self.grad[ci * hw + i] * map[i];
                        });
}

}  // namespace nervc

#endif  // NERVC_NN_OPS_HPP
