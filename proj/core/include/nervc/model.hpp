// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NERVC_MODEL_HPP
#define NERVC_MODEL_HPP

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "nervc/autograd.hpp"
#include "nervc/nn_kernels.hpp"
#include "nervc/nn_ops.hpp"
#include "nervc/quant.hpp"
#include "nervc/rng.hpp"
#include "nervc/variant.hpp"

namespace nervc {

// [sin(b^0 pi t), cos(b^0 pi t), ..., sin(b^{l-1} pi t), cos(b^{l-1} pi t)]
template <typename S>
TensorT<S> positional_encode(double t, double base, std::size_t levels) {
  if (!(t >= 0.0 && t <= 1.0))
    throw input_error("temporal index " + std::to_string(t) + " outside [0,1]");
  if (levels < 1) throw input_error("positional encoding needs at least one level");
  TensorT<S> out({2 * levels});
  double freq = 1.0;
  for (std::size_t i = 0; i < levels; ++i) {
    const double a = freq * std::numbers::pi * t;
    out[2 * i] = static_cast<S>(std::sin(a));
    out[2 * i + 1] = static_cast<S>(std::cos(a));
    freq *= base;
  }
  return out;
}

// The complete learnable state of one model; in this representation the
// parameters ARE the video. Canonical order (init, checkpoints, optimizer):
// stem1, stem2, block1..blockN, head; weight before bias.
template <typename S>
struct ModelParamsT {
  VariantConfig cfg;
  ValueT<S> stem_w1, stem_b1;
  ValueT<S> stem_w2, stem_b2;
  struct Block {
    ValueT<S> w, b;
  };
  std::vector<Block> blocks;
  ValueT<S> head_w, head_b;

  struct Named {
    std::string name;
    ValueT<S>* value;
  };

  std::vector<Named> named() {
    std::vector<Named> v;
    v.push_back({"stem1.weight", &stem_w1});
    v.push_back({"stem1.bias", &stem_b1});
    v.push_back({"stem2.weight", &stem_w2});
    v.push_back({"stem2.bias", &stem_b2});
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const std::string p = "block" + std::to_string(i + 1);
      v.push_back({p + ".conv.weight", &blocks[i].w});
      v.push_back({p + ".conv.bias", &blocks[i].b});
    }
    v.push_back({"head.weight", &head_w});
    v.push_back({"head.bias", &head_b});
    return v;
  }

  std::size_t count() {
    std::size_t n = 0;
    for (auto& p : named()) n += p.value->value().size();
    return n;
  }

  void zero_grad() {
    for (auto& p : named()) p.value->zero_grad();
  }

  bool all_finite() {
    for (auto& p : named())
      if (!p.value->value().all_finite()) return false;
    return true;
  }

  // Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) per layer, weights and biases
  // alike, drawn in canonical order from one seeded stream.
  static ModelParamsT init(const VariantConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    auto draw = [&rng](std::vector<std::size_t> shape, std::size_t fan_in) {
      TensorT<S> t(std::move(shape));
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = static_cast<S>(rng.uniform(-bound, bound));
      return ValueT<S>::parameter(std::move(t));
    };

    ModelParamsT p;
    p.cfg = cfg;
    p.stem_w1 = draw({cfg.stem_hidden, cfg.pe_dim()}, cfg.pe_dim());
    p.stem_b1 = draw({cfg.stem_hidden}, cfg.pe_dim());
    p.stem_w2 = draw({cfg.seed_len(), cfg.stem_hidden}, cfg.stem_hidden);
    p.stem_b2 = draw({cfg.seed_len()}, cfg.stem_hidden);
    for (std::size_t i = 0; i < cfg.num_blocks(); ++i) {
      const std::size_t cin = cfg.block_in_channels(i);
      const std::size_t cout = cfg.block_conv_channels(i);
      const std::size_t fan = cin * cfg.kernel * cfg.kernel;
      Block b;
      b.w = draw({cout, cin, cfg.kernel, cfg.kernel}, fan);
      b.b = draw({cout}, fan);
      p.blocks.push_back(std::move(b));
    }
    const std::size_t clast = cfg.stage_widths.back();
    p.head_w = draw({3, clast, 1, 1}, clast);
    p.head_b = draw({3}, clast);
    return p;
  }
};

using ModelParams = ModelParamsT<float>;

// Forward engines. The decoder body below is written once and instantiated
// against either engine, so the training graph and the plain inference path
// run the exact same kernel sequence: training-time outputs and decoded
// frames agree bitwise.

template <typename S>
struct AgEngineT {
  using Val = ValueT<S>;
  Val input(TensorT<S> t) const { return Val::constant(std::move(t)); }
  const Val& weight(const ValueT<S>& w) const { return w; }
  Val linear(const Val& x, const Val& w, const ValueT<S>& b) const {
    return nervc::linear(x, w, b);
  }
  Val conv2d(const Val& x, const Val& w, const ValueT<S>& b) const {
    return nervc::conv2d(x, w, b);
  }
  Val pixel_shuffle(const Val& x, std::size_t s) const {
    return nervc::pixel_shuffle(x, s);
  }
  Val gelu(const Val& x) const { return nervc::gelu(x); }
  Val sigmoid(const Val& x) const { return nervc::sigmoid(x); }
  Val reshape(const Val& x, std::vector<std::size_t> sh) const {
    return nervc::reshape(x, std::move(sh));
  }
};

// Training engine with fake-quantized weights (biases stay full precision).
template <typename S>
struct QatEngineT : AgEngineT<S> {
  QuantPolicy policy;
  explicit QatEngineT(QuantPolicy p) : policy(p) {}
  ValueT<S> weight(const ValueT<S>& w) const { return fake_quant(w, policy); }
};

template <typename S>
struct RawEngineT {
  using Val = TensorT<S>;
  Val input(TensorT<S> t) const { return t; }
  const Val& weight(const ValueT<S>& w) const { return w.value(); }
  Val linear(const Val& x, const Val& w, const ValueT<S>& b) const {
    Val y;
    kernels::linear_forward(x, w, b.value(), y);
    return y;
  }
  Val conv2d(const Val& x, const Val& w, const ValueT<S>& b) const {
    Val y;
    kernels::conv2d_forward(x, w, b.value(), y);
    return y;
  }
  Val pixel_shuffle(const Val& x, std::size_t s) const {
    Val y;
    kernels::pixel_shuffle_forward(x, s, y);
    return y;
  }
  Val gelu(const Val& x) const {
    Val y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = kernels::gelu_fwd(x[i]);
    return y;
  }
  Val sigmoid(const Val& x) const {
    Val y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = kernels::sigmoid_fwd(x[i]);
    return y;
  }
  Val reshape(const Val& x, std::vector<std::size_t> sh) const {
    return x.reshaped(std::move(sh));
  }
};

using AgEngine = AgEngineT<float>;
using RawEngine = RawEngineT<float>;
using QatEngine = QatEngineT<float>;

// Decode the frame at normalized index t. When `features` is non-null it
// receives each block's post-activation output (the feature-distillation
// taps), in block order.
template <typename E, typename S>
typename E::Val model_forward(const E& eng, const ModelParamsT<S>& params, double t,
                              std::vector<typename E::Val>* features = nullptr) {
  const VariantConfig& cfg = params.cfg;
  auto x = eng.input(positional_encode<S>(t, cfg.pe_base, cfg.pe_levels));
  x = eng.gelu(eng.linear(x, eng.weight(params.stem_w1), params.stem_b1));
  x = eng.gelu(eng.linear(x, eng.weight(params.stem_w2), params.stem_b2));
  x = eng.reshape(x, {cfg.seed_channels, cfg.seed_h, cfg.seed_w});
  for (std::size_t i = 0; i < cfg.num_blocks(); ++i) {
    x = eng.conv2d(x, eng.weight(params.blocks[i].w), params.blocks[i].b);
    x = eng.pixel_shuffle(x, cfg.strides[i]);
    x = eng.gelu(x);
    if (features) features->push_back(x);
  }
  x = eng.conv2d(x, eng.weight(params.head_w), params.head_b);
  return eng.sigmoid(x);
}

// Plain inference decode.
template <typename S>
TensorT<S> decode_frame(const ModelParamsT<S>& params, double t) {
  return model_forward(RawEngineT<S>{}, params, t);
}

// Post-training quantization: returns a copy of the parameters with every
// weight tensor pushed through quantize/dequantize. Biases are untouched.
// bits == 32 is the passthrough setting: the copy is bit-identical.
inline ModelParams ptq_apply(ModelParams params, const QuantPolicy& policy) {
  ModelParams out = ModelParams::init(params.cfg, 0);
  auto src = params.named();  // copy shares handles; read-only here
  auto dst = out.named();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Tensor& v = src[i].value->value();
    const bool is_weight = src[i].name.size() > 7 &&
                           src[i].name.compare(src[i].name.size() - 7, 7, ".weight") == 0;
    dst[i].value->value() =
        (is_weight && policy.bits != 32) ? fake_quant_tensor(v, policy) : v;
  }
  return out;
}

}  // namespace nervc

#endif  // NERVC_MODEL_HPP
