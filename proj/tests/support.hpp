// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NERVC_TESTS_SUPPORT_HPP
#define NERVC_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "nervc/autograd.hpp"
#include "nervc/rng.hpp"
#include "nervc/tensor.hpp"

// Reference implementations and the finite-difference harness shared by the
// test binaries. Everything here is written independently of the production
// kernels: plain nested loops, no Eigen, no shared helpers.

namespace testsup {

template <typename S>
nervc::TensorT<S> rand_tensor(nervc::Rng& rng, std::vector<std::size_t> shape,
                              double lo = -1.0, double hi = 1.0) {
  nervc::TensorT<S> t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<S>(rng.uniform(lo, hi));
  return t;
}

// Same-size cross-correlation with zero padding, accumulated in double.
// Quadruple loop over output channel, position, input channel, tap.
template <typename S>
nervc::TensorT<S> conv2d_reference(const nervc::TensorT<S>& x,
                                   const nervc::TensorT<S>& w,
                                   const nervc::TensorT<S>& b) {
  const std::size_t cin = x.extent(0), h = x.extent(1), wd = x.extent(2);
  const std::size_t cout = w.extent(0), k = w.extent(2);
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(k / 2);
  nervc::TensorT<S> y({cout, h, wd});
  for (std::size_t co = 0; co < cout; ++co)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < wd; ++j) {
        double acc = static_cast<double>(b[co]);
        for (std::size_t ci = 0; ci < cin; ++ci)
          for (std::ptrdiff_t u = -r; u <= r; ++u)
            for (std::ptrdiff_t v = -r; v <= r; ++v) {
              const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(i) + u;
              const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(j) + v;
              if (ii < 0 || jj < 0 || ii >= static_cast<std::ptrdiff_t>(h) ||
                  jj >= static_cast<std::ptrdiff_t>(wd))
                continue;
              acc += static_cast<double>(x.at(ci, static_cast<std::size_t>(ii),
                                              static_cast<std::size_t>(jj))) *
                     static_cast<double>(
                         w.at(co, ci, static_cast<std::size_t>(u + r),
                              static_cast<std::size_t>(v + r)));
            }
        y.at(co, i, j) = static_cast<S>(acc);
      }
  return y;
}

// Index-formula oracle: out(c, h*s+i, w*s+j) = in(c*s*s + i*s + j, h, w).
template <typename S>
nervc::TensorT<S> pixel_shuffle_reference(const nervc::TensorT<S>& x, std::size_t s) {
  const std::size_t c = x.extent(0) / (s * s), h = x.extent(1), w = x.extent(2);
  nervc::TensorT<S> y({c, h * s, w * s});
  for (std::size_t co = 0; co < c; ++co)
    for (std::size_t i = 0; i < h * s; ++i)
      for (std::size_t j = 0; j < w * s; ++j)
        y.at(co, i, j) = x.at(co * s * s + (i % s) * s + (j % s), i / s, j / s);
  return y;
}

// Central finite differences against one reverse-mode backward pass, in
// double precision. `build` rebuilds the scalar loss graph from the current
// parameter values; the analytic gradients are taken once at the base point,
// then each sampled element is probed with +/-h evaluations.
struct FdResult {
  double max_rel = 0.0;
  std::size_t checked = 0;
};

template <typename Build>
FdResult fd_check(const std::vector<nervc::ValueT<double>*>& params, Build&& build,
                  std::size_t samples_per_tensor, std::uint64_t seed,
                  double h = 1e-5) {
  for (auto* p : params) p->zero_grad();
  nervc::backward(build());
  std::vector<nervc::TensorT<double>> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad());

  nervc::Rng rng(seed);
  FdResult res;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    nervc::TensorT<double>& t = params[pi]->value();
    std::vector<std::size_t> idx;
    if (t.size() <= samples_per_tensor) {
      idx.resize(t.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
    } else {
      for (std::size_t n = 0; n < samples_per_tensor; ++n)
        idx.push_back(static_cast<std::size_t>(rng.bounded(t.size())));
    }
    for (std::size_t i : idx) {
      const double v = t[i];
      t[i] = v + h;
      const double lp = build().item();
      t[i] = v - h;
      const double lm = build().item();
      t[i] = v;
      const double fd = (lp - lm) / (2.0 * h);
      const double rel =
          std::abs(analytic[pi][i] - fd) / (std::abs(fd) + 1e-8);
      res.max_rel = std::max(res.max_rel, rel);
      ++res.checked;
    }
  }
  return res;
}

inline double max_abs_diff(const nervc::Tensor& a, const nervc::Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return m;
}

inline bool bitwise_equal(const nervc::Tensor& a, const nervc::Tensor& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace testsup

#endif  // NERVC_TESTS_SUPPORT_HPP
