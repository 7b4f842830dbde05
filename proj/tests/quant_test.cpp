// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "nervc/nn_ops.hpp"
#include "nervc/quant.hpp"
#include "support.hpp"

using nervc::QuantizedTensor;
using nervc::QuantPolicy;
using nervc::Rng;
using nervc::Tensor;
using nervc::ValueT;
using testsup::rand_tensor;

namespace {

QuantPolicy policy(int bits, bool per_channel = true) {
  QuantPolicy p;
  p.bits = bits;
  p.per_channel = per_channel;
  return p;
}

double frob_err(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("unit-range tensor at eight bits: top code clamps") {
  Tensor w = Tensor::from_vector({1, 2}, {0.0f, 1.0f});
  auto q = nervc::quantize(w, policy(8));
  REQUIRE(q.channels() == 1);
  CHECK(q.scale[0] == doctest::Approx(1.0 / 256.0));
  CHECK(q.w_min[0] == 0.0f);
  auto codes = nervc::unpack_bits(q.codes, 8, 2);
  CHECK(codes[0] == 0);
  CHECK(codes[1] == 255);  // round((1-0)/s) = 256, clamped into range
  Tensor back = nervc::dequantize(q);
  CHECK(back[0] == 0.0f);
  CHECK(back[1] == doctest::Approx(255.0 / 256.0));
}

TEST_CASE("constant channels reproduce exactly") {
  Tensor w = Tensor::full({3, 4}, 0.3125f);
  auto q = nervc::quantize(w, policy(4));
  for (std::size_t c = 0; c < 3; ++c) CHECK(q.scale[c] == 0.0f);
  CHECK(testsup::bitwise_equal(nervc::dequantize(q), w));
}

TEST_CASE("two-bit codes match an exhaustive level search") {
  Rng rng(31);
  auto w = rand_tensor<float>(rng, {2, 40}, -0.8, 0.9);
  auto q = nervc::quantize(w, policy(2));
  auto codes = nervc::unpack_bits(q.codes, 2, w.size());
  for (std::size_t c = 0; c < 2; ++c) {
    const double lo = q.w_min[c], s = q.scale[c];
    for (std::size_t i = 0; i < 40; ++i) {
      const double v = w[c * 40 + i];
      // Nearest of the four representable levels, ties to the larger code.
      std::uint32_t best = 0;
      double best_d = 1e30;
      for (std::uint32_t k = 0; k < 4; ++k) {
        const double d = std::abs(v - (lo + s * k));
        if (d < best_d || (d == best_d && k > best)) {
          best_d = d;
          best = k;
        }
      }
      // Skip elements sitting essentially on a cell boundary, where the
      // search and the production rounding may break the tie differently.
      const double u = (v - lo) / s;
      if (std::abs(u - std::floor(u) - 0.5) < 1e-6) continue;
      CHECK(codes[c * 40 + i] == best);
    }
  }
}

TEST_CASE("round-trip error obeys the half-step bound off the clamp") {
  Rng rng(32);
  for (int bits : {2, 3, 4, 5, 6, 7, 8}) {
    for (bool per_channel : {true, false}) {
      auto w = rand_tensor<float>(rng, {4, 50}, -1.2, 1.0);
      auto q = nervc::quantize(w, policy(bits, per_channel));
      Tensor back = nervc::dequantize(q);
      auto codes = nervc::unpack_bits(q.codes, bits, w.size());
      const std::uint32_t top = (1u << bits) - 1;
      const std::size_t per = w.size() / q.channels();
      for (std::size_t i = 0; i < w.size(); ++i) {
        const std::size_t c = i / per;
        const double s = q.scale[c];
        const double range = s * (1u << bits);
        const double err = std::abs(static_cast<double>(w[i]) - back[i]);
        if (err > s / 2.0 + 1e-6 * range) {
          // Only the clamped top code may exceed half a step, and it stays
          // within one full step.
          CHECK(codes[i] == top);
          CHECK(err <= s + 1e-6 * range);
        }
      }
    }
  }
}

TEST_CASE("round-trip error never grows with bit width") {
  Rng rng(33);
  auto w = rand_tensor<float>(rng, {3, 64}, -0.5, 1.5);
  std::vector<double> prev;
  for (int bits = 2; bits <= 8; ++bits) {
    Tensor back = nervc::fake_quant_tensor(w, policy(bits));
    std::vector<double> err(w.size());
    for (std::size_t i = 0; i < w.size(); ++i)
      err[i] = std::abs(static_cast<double>(w[i]) - back[i]);
    if (!prev.empty())
      for (std::size_t i = 0; i < err.size(); ++i)
        CHECK(err[i] <= prev[i] + 1e-6);  // refined grids keep every old level
    prev = std::move(err);
  }
}

TEST_CASE("per-channel calibration beats per-tensor on skewed channels") {
  Rng rng(34);
  // One narrow channel and one wide one: a shared range wastes most of the
  // narrow channel's resolution.
  Tensor w({2, 64});
  for (std::size_t i = 0; i < 64; ++i) w[i] = static_cast<float>(rng.uniform(0.0, 0.01));
  for (std::size_t i = 0; i < 64; ++i) w[64 + i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  for (int bits : {2, 4, 8}) {
    const double per_chan = frob_err(w, nervc::fake_quant_tensor(w, policy(bits, true)));
    const double per_tensor = frob_err(w, nervc::fake_quant_tensor(w, policy(bits, false)));
    CHECK(per_chan <= per_tensor);
  }
}

TEST_CASE("bit packing round-trips and sizes follow the formula") {
  Rng rng(35);
  for (int bits = 2; bits <= 8; ++bits) {
    const std::size_t n = 97;
    std::vector<std::uint32_t> codes(n);
    for (auto& c : codes)
      c = static_cast<std::uint32_t>(rng.bounded(1u << bits));
    auto bytes = nervc::pack_bits(codes, bits);
    CHECK(bytes.size() == (n * static_cast<std::size_t>(bits) + 7) / 8);
    CHECK(nervc::unpack_bits(bytes, bits, n) == codes);
  }

  // Three 4-bit codes need two bytes.
  CHECK(nervc::pack_bits({1, 2, 3}, 4).size() == 2);
  // Eight bits is a plain byte-per-code stream.
  auto bytes = nervc::pack_bits({7, 200, 31}, 8);
  CHECK(bytes == std::vector<std::uint8_t>{7, 200, 31});
}

TEST_CASE("pack_bits rejects codes that overflow the width") {
  CHECK_THROWS_AS(nervc::pack_bits({4}, 2), nervc::internal_error);
}

TEST_CASE("unpack_bits rejects a payload of the wrong length") {
  auto bytes = nervc::pack_bits({1, 2, 3}, 4);
  CHECK_THROWS_AS(nervc::unpack_bits(bytes, 4, 5), nervc::format_error);
}

TEST_CASE("bit widths outside two through eight are rejected") {
  Rng rng(36);
  auto w = rand_tensor<float>(rng, {2, 8});
  CHECK_THROWS_AS(nervc::quantize(w, policy(1)), nervc::config_error);
  CHECK_THROWS_AS(nervc::quantize(w, policy(9)), nervc::config_error);
}

TEST_CASE("fake quantization forward equals the round-trip image") {
  Rng rng(37);
  auto t = rand_tensor<float>(rng, {4, 20});
  auto w = ValueT<float>::parameter(t);
  auto fq = nervc::fake_quant(w, policy(4));
  CHECK(testsup::bitwise_equal(fq.value(), nervc::fake_quant_tensor(t, policy(4))));
}

TEST_CASE("straight-through gradient of a fake-quantized sum is all ones") {
  Rng rng(38);
  auto w = ValueT<float>::parameter(rand_tensor<float>(rng, {3, 12}));
  nervc::backward(nervc::sum(nervc::fake_quant(w, policy(4))));
  for (std::size_t i = 0; i < w.grad().size(); ++i) CHECK(w.grad()[i] == 1.0f);
}

TEST_CASE("linear probe gradients agree with and without fake quantization") {
  Rng rng(39);
  auto x = rand_tensor<float>(rng, {6});
  auto b = rand_tensor<float>(rng, {4});
  auto wt = rand_tensor<float>(rng, {4, 6});

  auto w1 = ValueT<float>::parameter(wt);
  nervc::backward(nervc::sum(
      nervc::linear(ValueT<float>::constant(x), nervc::fake_quant(w1, policy(4)),
                    ValueT<float>::constant(b))));

  auto w2 = ValueT<float>::parameter(wt);
  nervc::backward(nervc::sum(nervc::linear(ValueT<float>::constant(x), w2,
                                           ValueT<float>::constant(b))));

  CHECK(testsup::bitwise_equal(w1.grad(), w2.grad()));
}

TEST_CASE("a small real-domain update can leave the codes unchanged") {
  // The optimizer moves the latent full-precision weights; the quantized
  // codes only change when an update crosses a cell boundary.
  Tensor t = Tensor::from_vector({1, 2}, {0.1f, 0.9f});
  auto w = ValueT<float>::parameter(t);
  auto before = nervc::quantize(w.value(), policy(4));

  nervc::backward(nervc::sum(nervc::fake_quant(w, policy(4))));
  for (std::size_t i = 0; i < 2; ++i) w.value()[i] -= 1e-4f * w.grad()[i];

  CHECK(w.value()[0] != 0.1f);  // the weight itself moved
  auto after = nervc::quantize(w.value(), policy(4));
  CHECK(before.codes == after.codes);
}
