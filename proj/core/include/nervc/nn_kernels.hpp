// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NERVC_NN_KERNELS_HPP
#define NERVC_NN_KERNELS_HPP

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <vector>

#include "nervc/errors.hpp"
#include "nervc/tensor.hpp"

// Raw numeric kernels shared by the autograd layer and the plain inference
// path. Nothing in here builds a graph; backward entry points accumulate
// (+=) into caller-owned gradient buffers so one tensor can receive
// contributions from several graph edges.

namespace nervc::kernels {

template <typename S>
using MatRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MatCM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
template <typename S>
using MapRM = Eigen::Map<MatRM<S>>;
template <typename S>
using CMapRM = Eigen::Map<const MatRM<S>>;

// ---------------------------------------------------------------------------
// Multiplication counter.
//
// Counts the multiplies issued by convolution forward passes:
// out_pixels * C_out * (k*k*C_in) per call. Backward passes do not count;
// the figure is the decode cost of a frame and is what the static
// complexity report predicts.

inline std::atomic<std::uint64_t>& conv_mult_counter() {
  static std::atomic<std::uint64_t> c{0};
  return c;
}

inline void reset_conv_mults() { conv_mult_counter().store(0); }
inline std::uint64_t conv_mults() { return conv_mult_counter().load(); }

// ---------------------------------------------------------------------------
// Pointwise functions.

// tanh form of GELU, the one used by the models here.
template <typename S>
inline S gelu_fwd(S x) {
  const double xd = static_cast<double>(x);
  const double c = 0.7978845608028654;  // sqrt(2/pi)
  const double inner = c * (xd + 0.044715 * xd * xd * xd);
  return static_cast<S>(0.5 * xd * (1.0 + std::tanh(inner)));
}

template <typename S>
inline S gelu_grad(S x) {
  const double xd = static_cast<double>(x);
  const double c = 0.7978845608028654;
  const double u = c * (xd + 0.044715 * xd * xd * xd);
  const double t = std::tanh(u);
  const double du = c * (1.0 + 3.0 * 0.044715 * xd * xd);
  return static_cast<S>(0.5 * (1.0 + t) + 0.5 * xd * (1.0 - t * t) * du);
}

template <typename S>
inline S sigmoid_fwd(S x) {
  const double xd = static_cast<double>(x);
  return static_cast<S>(1.0 / (1.0 + std::exp(-xd)));
}

// ---------------------------------------------------------------------------
// Linear: y = W x + b with W [n_out, n_in].

template <typename S>
void linear_forward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b,
                    TensorT<S>& y) {
  if (w.rank() != 2) throw config_error("linear weight must be rank 2");
  const std::size_t n_out = w.extent(0), n_in = w.extent(1);
  if (x.size() != n_in) throw config_error("linear input length mismatch");
  if (b.size() != n_out) throw config_error("linear bias length mismatch");
  y = TensorT<S>({n_out});
  CMapRM<S> W(w.data(), static_cast<Eigen::Index>(n_out), static_cast<Eigen::Index>(n_in));
  Eigen::Map<const Eigen::Vector<S, Eigen::Dynamic>> X(x.data(), static_cast<Eigen::Index>(n_in));
  Eigen::Map<Eigen::Vector<S, Eigen::Dynamic>> Y(y.data(), static_cast<Eigen::Index>(n_out));
  Y.noalias() = W * X;
  for (std::size_t i = 0; i < n_out; ++i) y[i] += b[i];
}

template <typename S>
void linear_backward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& gy,
                     TensorT<S>* gx, TensorT<S>* gw, TensorT<S>* gb) {
  const std::size_t n_out = w.extent(0), n_in = w.extent(1);
  CMapRM<S> W(w.data(), static_cast<Eigen::Index>(n_out), static_cast<Eigen::Index>(n_in));
  Eigen::Map<const Eigen::Vector<S, Eigen::Dynamic>> GY(gy.data(), static_cast<Eigen::Index>(n_out));
  if (gx) {
    Eigen::Map<Eigen::Vector<S, Eigen::Dynamic>> GX(gx->data(), static_cast<Eigen::Index>(n_in));
    GX.noalias() += W.transpose() * GY;
  }
  if (gw) {
    Eigen::Map<const Eigen::Vector<S, Eigen::Dynamic>> X(x.data(), static_cast<Eigen::Index>(n_in));
    MapRM<S> GW(gw->data(), static_cast<Eigen::Index>(n_out), static_cast<Eigen::Index>(n_in));
    GW.noalias() += GY * X.transpose();
  }
  if (gb)
    for (std::size_t i = 0; i < n_out; ++i) (*gb)[i] += gy[i];
}

// ---------------------------------------------------------------------------
// conv2d, stride 1, odd square kernel, zero padding that keeps H x W.
// x [C_in, H, W], w [C_out, C_in, k, k], b [C_out], y [C_out, H, W].
//
// Lowered to a GEMM: columns of the im2col buffer are output pixels, rows are
// the k*k*C_in taps feeding each pixel. A 1x1 kernel skips the lowering and
// multiplies the weight matrix straight into the input planes.

template <typename S>
void conv2d_forward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b,
                    TensorT<S>& y) {
  if (x.rank() != 3 || w.rank() != 4) throw config_error("conv2d expects [C,H,W] and [O,C,k,k]");
  const std::size_t cin = x.extent(0), h = x.extent(1), wd = x.extent(2);
  const std::size_t cout = w.extent(0), k = w.extent(2);
  if (w.extent(1) != cin || w.extent(3) != k) throw config_error("conv2d weight shape mismatch");
  if (k % 2 == 0) throw config_error("conv2d kernel must be odd");
  if (b.size() != cout) throw config_error("conv2d bias length mismatch");

  y = TensorT<S>({cout, h, wd});
  const std::size_t hw = h * wd;
  const Eigen::Index ehw = static_cast<Eigen::Index>(hw);
  const Eigen::Index ecout = static_cast<Eigen::Index>(cout);
  const Eigen::Index erows = static_cast<Eigen::Index>(cin * k * k);
  CMapRM<S> W(w.data(), ecout, erows);
  MapRM<S> Y(y.data(), ecout, ehw);

  if (k == 1) {
    CMapRM<S> X(x.data(), static_cast<Eigen::Index>(cin), ehw);
    Y.noalias() = W * X;
  } else {
    const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(k / 2);
    MatCM<S> col(erows, ehw);
    col.setZero();
    const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(h);
    const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(wd);
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const S* plane = x.data() + ci * hw;
      for (std::ptrdiff_t ki = -r; ki <= r; ++ki) {
        for (std::ptrdiff_t kj = -r; kj <= r; ++kj) {
          const std::size_t row =
              ci * k * k + static_cast<std::size_t>(ki + r) * k + static_cast<std::size_t>(kj + r);
          S* dst = col.data() + row;  // stride erows between pixels
          for (std::ptrdiff_t hh = 0; hh < ih; ++hh) {
            const std::ptrdiff_t sh = hh + ki;
            if (sh < 0 || sh >= ih) continue;
            const S* srow = plane + static_cast<std::size_t>(sh) * wd;
            const std::ptrdiff_t w0 = std::max<std::ptrdiff_t>(0, -kj);
            const std::ptrdiff_t w1 = std::min<std::ptrdiff_t>(iw, iw - kj);
            S* drow = dst + static_cast<std::size_t>(hh) * wd * erows;
            for (std::ptrdiff_t ww = w0; ww < w1; ++ww)
              drow[ww * erows] = srow[ww + kj];
          }
        }
      }
    }
    Y.noalias() = W * col;
  }

  for (std::size_t co = 0; co < cout; ++co) {
    S* plane = y.data() + co * hw;
    const S bias = b[co];
    for (std::size_t i = 0; i < hw; ++i) plane[i] += bias;
  }

  conv_mult_counter().fetch_add(
      static_cast<std::uint64_t>(hw) * cout * (k * k * cin),
      std::memory_order_relaxed);
}

template <typename S>
void conv2d_backward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& gy,
                     TensorT<S>* gx, TensorT<S>* gw, TensorT<S>* gb) {
  const std::size_t cin = x.extent(0), h = x.extent(1), wd = x.extent(2);
  const std::size_t cout = w.extent(0), k = w.extent(2);
  const std::size_t hw = h * wd;
  const Eigen::Index ehw = static_cast<Eigen::Index>(hw);
  const Eigen::Index ecout = static_cast<Eigen::Index>(cout);
  const Eigen::Index erows = static_cast<Eigen::Index>(cin * k * k);
  CMapRM<S> W(w.data(), ecout, erows);
  CMapRM<S> GY(gy.data(), ecout, ehw);

  if (gb) {
    for (std::size_t co = 0; co < cout; ++co) {
      const S* plane = gy.data() + co * hw;
      S acc = S(0);
      for (std::size_t i = 0; i < hw; ++i) acc += plane[i];
      (*gb)[co] += acc;
    }
  }

  if (k == 1) {
    CMapRM<S> X(x.data(), static_cast<Eigen::Index>(cin), ehw);
    if (gw) {
      MapRM<S> GW(gw->data(), ecout, erows);
      GW.noalias() += GY * X.transpose();
    }
    if (gx) {
      MapRM<S> GX(gx->data(), static_cast<Eigen::Index>(cin), ehw);
      GX.noalias() += W.transpose() * GY;
    }
    return;
  }

  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(k / 2);
  const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(h);
  const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(wd);

  // Rebuild the im2col buffer; cheaper than caching it across the graph.
  MatCM<S> col(erows, ehw);
  if (gw) {
    col.setZero();
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const S* plane = x.data() + ci * hw;
      for (std::ptrdiff_t ki = -r; ki <= r; ++ki) {
        for (std::ptrdiff_t kj = -r; kj <= r; ++kj) {
          const std::size_t row =
              ci * k * k + static_cast<std::size_t>(ki + r) * k + static_cast<std::size_t>(kj + r);
          S* dst = col.data() + row;
          for (std::ptrdiff_t hh = 0; hh < ih; ++hh) {
            const std::ptrdiff_t sh = hh + ki;
            if (sh < 0 || sh >= ih) continue;
            const S* srow = plane + static_cast<std::size_t>(sh) * wd;
            const std::ptrdiff_t w0 = std::max<std::ptrdiff_t>(0, -kj);
            const std::ptrdiff_t w1 = std::min<std::ptrdiff_t>(iw, iw - kj);
            S* drow = dst + static_cast<std::size_t>(hh) * wd * erows;
            for (std::ptrdiff_t ww = w0; ww < w1; ++ww)
              drow[ww * erows] = srow[ww + kj];
          }
        }
      }
    }
    MapRM<S> GW(gw->data(), ecout, erows);
    GW.noalias() += GY * col.transpose();
  }

  if (gx) {
    // cols = W^T gy, then fold each k*k*C_in column back onto the input grid.
    MatCM<S> gcol(erows, ehw);
    gcol.noalias() = W.transpose() * GY;
    for (std::size_t ci = 0; ci < cin; ++ci) {
      S* plane = gx->data() + ci * hw;
      for (std::ptrdiff_t ki = -r; ki <= r; ++ki) {
        for (std::ptrdiff_t kj = -r; kj <= r; ++kj) {
          const std::size_t row =
              ci * k * k + static_cast<std::size_t>(ki + r) * k + static_cast<std::size_t>(kj + r);
          const S* src = gcol.data() + row;
          for (std::ptrdiff_t hh = 0; hh < ih; ++hh) {
            const std::ptrdiff_t sh = hh + ki;
            if (sh < 0 || sh >= ih) continue;
            S* srow = plane + static_cast<std::size_t>(sh) * wd;
            const std::ptrdiff_t w0 = std::max<std::ptrdiff_t>(0, -kj);
            const std::ptrdiff_t w1 = std::min<std::ptrdiff_t>(iw, iw - kj);
            const S* drow = src + static_cast<std::size_t>(hh) * wd * erows;
            for (std::ptrdiff_t ww = w0; ww < w1; ++ww)
              srow[ww + kj] += drow[ww * erows];
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Pixel shuffle: [C*s*s, H, W] -> [C, H*s, W*s].
// Channel block c*s*s + dy*s + dx lands on output pixel (h*s+dy, w*s+dx) of
// channel c. Unshuffle is the exact inverse and doubles as the adjoint since
// the map is a permutation.

template <typename S>
void pixel_shuffle_forward(const TensorT<S>& x, std::size_t s, TensorT<S>& y) {
  if (x.rank() != 3) throw config_error("pixel_shuffle expects [C,H,W]");
  const std::size_t cin = x.extent(0), h = x.extent(1), w = x.extent(2);
  if (s == 0 || cin % (s * s) != 0)
    throw config_error("pixel_shuffle channel count not divisible by s^2");
  const std::size_t cout = cin / (s * s);
  y = TensorT<S>({cout, h * s, w * s});
  const std::size_t ow = w * s;
  for (std::size_t c = 0; c < cout; ++c)
    for (std::size_t dy = 0; dy < s; ++dy)
      for (std::size_t dx = 0; dx < s; ++dx) {
        const S* src = x.data() + ((c * s + dy) * s + dx) * h * w;
        for (std::size_t hh = 0; hh < h; ++hh) {
          S* dst = y.data() + c * (h * s) * ow + (hh * s + dy) * ow + dx;
          const S* srow = src + hh * w;
          for (std::size_t ww = 0; ww < w; ++ww) dst[ww * s] = srow[ww];
        }
      }
}

template <typename S>
void pixel_unshuffle_forward(const TensorT<S>& x, std::size_t s, TensorT<S>& y) {
  if (x.rank() != 3) throw config_error("pixel_unshuffle expects [C,H,W]");
  const std::size_t cin = x.extent(0), oh = x.extent(1), ow = x.extent(2);
  if (s == 0 || oh % s != 0 || ow % s != 0)
    throw config_error("pixel_unshuffle spatial extent not divisible by s");
  const std::size_t h = oh / s, w = ow / s;
  y = TensorT<S>({cin * s * s, h, w});
  for (std::size_t c = 0; c < cin; ++c)
    for (std::size_t dy = 0; dy < s; ++dy)
      for (std::size_t dx = 0; dx < s; ++dx) {
        S* dst = y.data() + ((c * s + dy) * s + dx) * h * w;
        for (std::size_t hh = 0; hh < h; ++hh) {
          const S* src = x.data() + c * oh * ow + (hh * s + dy) * ow + dx;
          S* drow = dst + hh * w;
          for (std::size_t ww = 0; ww < w; ++ww) drow[ww] = src[ww * s];
        }
      }
}

// Adjoints accumulate rather than overwrite.
template <typename S>
void pixel_shuffle_adjoint(const TensorT<S>& gy, std::size_t s, TensorT<S>& gx) {
  const std::size_t cout = gy.extent(0), oh = gy.extent(1), ow = gy.extent(2);
  const std::size_t h = oh / s, w = ow / s;
  for (std::size_t c = 0; c < cout; ++c)
    for (std::size_t dy = 0; dy < s; ++dy)
      for (std::size_t dx = 0; dx < s; ++dx) {
        S* dst = gx.data() + ((c * s + dy) * s + dx) * h * w;
        for (std::size_t hh = 0; hh < h; ++hh) {
          const S* src = gy.data() + c * oh * ow + (hh * s + dy) * ow + dx;
          S* drow = dst + hh * w;
          for (std::size_t ww = 0; ww < w; ++ww) drow[ww] += src[ww * s];
        }
      }
}

// ---------------------------------------------------------------------------
// Separable Gaussian blur with symmetric edge reflection (the sample just
// outside the border mirrors the one just inside: index -1 maps to 0,
// n maps to n-1).

inline std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

// Normalized 1-D kernel of 2*radius+1 taps, built in double then cast.
template <typename S>
std::vector<S> gaussian_taps(double sigma, std::size_t radius) {
  if (sigma <= 0.0) throw input_error("gaussian sigma must be positive");
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(radius);
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[i];
  }
  std::vector<S> out(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) out[i] = static_cast<S>(k[i] / sum);
  return out;
}

namespace detail {

// One horizontal pass over a single plane.
template <typename S>
void blur_rows(const S* src, S* dst, std::size_t h, std::size_t w,
               const std::vector<S>& taps) {
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(w);
  for (std::size_t hh = 0; hh < h; ++hh) {
    const S* s0 = src + hh * w;
    S* d0 = dst + hh * w;
    for (std::ptrdiff_t x = 0; x < iw; ++x) {
      S acc = S(0);
      for (std::ptrdiff_t t = -r; t <= r; ++t)
        acc += taps[static_cast<std::size_t>(t + r)] * s0[reflect_index(x + t, iw)];
      d0[x] = acc;
    }
  }
}

template <typename S>
void blur_cols(const S* src, S* dst, std::size_t h, std::size_t w,
               const std::vector<S>& taps) {
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const std::ptrdiff_t ihh = static_cast<std::ptrdiff_t>(h);
  for (std::ptrdiff_t y = 0; y < ihh; ++y) {
    S* d0 = dst + static_cast<std::size_t>(y) * w;
    for (std::size_t x = 0; x < w; ++x) d0[x] = S(0);
    for (std::ptrdiff_t t = -r; t <= r; ++t) {
      const S tap = taps[static_cast<std::size_t>(t + r)];
      const S* s0 = src + static_cast<std::size_t>(reflect_index(y + t, ihh)) * w;
      for (std::size_t x = 0; x < w; ++x) d0[x] += tap * s0[x];
    }
  }
}

// Adjoint of one pass: scatter dst_grad back through the reflected reads.
template <typename S>
void blur_rows_adjoint(const S* g, S* gx, std::size_t h, std::size_t w,
                       const std::vector<S>& taps) {
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(w);
  for (std::size_t hh = 0; hh < h; ++hh) {
    const S* g0 = g + hh * w;
    S* gx0 = gx + hh * w;
    for (std::ptrdiff_t x = 0; x < iw; ++x) {
      const S gv = g0[x];
      for (std::ptrdiff_t t = -r; t <= r; ++t)
        gx0[reflect_index(x + t, iw)] += taps[static_cast<std::size_t>(t + r)] * gv;
    }
  }
}

template <typename S>
void blur_cols_adjoint(const S* g, S* gx, std::size_t h, std::size_t w,
                       const std::vector<S>& taps) {
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const std::ptrdiff_t ihh = static_cast<std::ptrdiff_t>(h);
  for (std::ptrdiff_t y = 0; y < ihh; ++y) {
    const S* g0 = g + static_cast<std::size_t>(y) * w;
    for (std::ptrdiff_t t = -r; t <= r; ++t) {
      const S tap = taps[static_cast<std::size_t>(t + r)];
      S* gx0 = gx + static_cast<std::size_t>(reflect_index(y + t, ihh)) * w;
      for (std::size_t x = 0; x < w; ++x) gx0[x] += tap * g0[x];
    }
  }
}

}  // namespace detail

// Blur every [H,W] plane of a [...,H,W] tensor. Horizontal then vertical.
template <typename S>
void blur_forward(const TensorT<S>& x, const std::vector<S>& taps, TensorT<S>& y) {
  if (x.rank() < 2) throw input_error("blur expects at least [H,W]");
  const std::size_t w = x.extent(x.rank() - 1);
  const std::size_t h = x.extent(x.rank() - 2);
  const std::size_t planes = x.size() / (h * w);
  y = TensorT<S>(x.shape());
  std::vector<S> tmp(h * w);
  for (std::size_t p = 0; p < planes; ++p) {
    const S* src = x.data() + p * h * w;
    S* dst = y.data() + p * h * w;
    detail::blur_rows(src, tmp.data(), h, w, taps);
    detail::blur_cols(tmp.data(), dst, h, w, taps);
  }
}

template <typename S>
void blur_adjoint(const TensorT<S>& gy, const std::vector<S>& taps, TensorT<S>& gx) {
  const std::size_t w = gy.extent(gy.rank() - 1);
  const std::size_t h = gy.extent(gy.rank() - 2);
  const std::size_t planes = gy.size() / (h * w);
  std::vector<S> tmp(h * w);
  for (std::size_t p = 0; p < planes; ++p) {
    const S* g = gy.data() + p * h * w;
    S* dst = gx.data() + p * h * w;
    for (auto& v : tmp) v = S(0);
    detail::blur_cols_adjoint(g, tmp.data(), h, w, taps);
    detail::blur_rows_adjoint(tmp.data(), dst, h, w, taps);
  }
}

}  // namespace nervc::kernels

#endif  // NERVC_NN_KERNELS_HPP
