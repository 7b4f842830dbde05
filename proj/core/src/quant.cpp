// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nervc/quant.hpp"

#include <algorithm>
#include <cmath>

#include "nervc/errors.hpp"

namespace nervc {

void QuantPolicy::validate() const {
  if (bits < 2 || bits > 8)
    throw config_error("bit-width " + std::to_string(bits) + " outside [2,8]");
}

std::vector<std::uint8_t> pack_bits(const std::vector<std::uint32_t>& codes, int bits) {
  if (bits < 1 || bits > 8) throw config_error("pack_bits bit-width outside [1,8]");
  const std::uint32_t limit = 1u << bits;
  std::vector<std::uint8_t> out((codes.size() * static_cast<std::size_t>(bits) + 7) / 8, 0);
  std::size_t bitpos = 0;
  for (std::uint32_t c : codes) {
    if (c >= limit) throw internal_error("quantization code overflows bit-width");
    for (int b = 0; b < bits; ++b, ++bitpos)
      if (c & (1u << b)) out[bitpos >> 3] |= static_cast<std::uint8_t>(1u << (bitpos & 7));
  }
  return out;
}

std::vector<std::uint32_t> unpack_bits(const std::vector<std::uint8_t>& bytes, int bits,
                                       std::size_t count) {
  if (bits < 1 || bits > 8) throw config_error("unpack_bits bit-width outside [1,8]");
  if (bytes.size() != (count * static_cast<std::size_t>(bits) + 7) / 8)
    throw format_error("packed payload length does not match code count");
  std::vector<std::uint32_t> out(count, 0);
  std::size_t bitpos = 0;
  for (std::size_t i = 0; i < count; ++i)
    for (int b = 0; b < bits; ++b, ++bitpos)
      if (bytes[bitpos >> 3] & (1u << (bitpos & 7))) out[i] |= 1u << b;
  return out;
}

QuantizedTensor quantize(const Tensor& w, const QuantPolicy& policy) {
  policy.validate();
  if (w.empty()) throw input_error("quantize of an empty tensor");
  if (!w.all_finite()) throw input_error("quantize of non-finite weights");

  QuantizedTensor q;
  q.bits = policy.bits;
  q.per_channel = policy.per_channel;
  q.shape = w.shape();
  q.count = w.size();

  const std::size_t chans = policy.per_channel && w.rank() >= 1 ? w.extent(0) : 1;
  const std::size_t per = w.size() / chans;
  q.w_min.resize(chans);
  q.scale.resize(chans);

  const double levels = static_cast<double>(1u << policy.bits);
  const std::uint32_t top = (1u << policy.bits) - 1;
  std::vector<std::uint32_t> codes(w.size());

  for (std::size_t c = 0; c < chans; ++c) {
    const float* p = w.data() + c * per;
    float lo = p[0], hi = p[0];
    for (std::size_t i = 1; i < per; ++i) {
      lo = std::min(lo, p[i]);
      hi = std::max(hi, p[i]);
    }
    const float s = static_cast<float>((static_cast<double>(hi) - lo) / levels);
    q.w_min[c] = lo;
    q.scale[c] = s;
    if (s == 0.0f) {
      for (std::size_t i = 0; i < per; ++i) codes[c * per + i] = 0;
      continue;
    }
    for (std::size_t i = 0; i < per; ++i) {
      const double u = (static_cast<double>(p[i]) - lo) / s;
      long idx = std::lround(u);
      if (idx < 0) idx = 0;
      if (idx > static_cast<long>(top)) idx = top;
      codes[c * per + i] = static_cast<std::uint32_t>(idx);
    }
  }

  q.codes = pack_bits(codes, policy.bits);
  return q;
}

Tensor dequantize(const QuantizedTensor& q) {
  if (q.bits < 2 || q.bits > 8) throw format_error("quantized tensor has bad bit-width");
  const std::size_t chans = q.channels();
  if (chans == 0 || q.count == 0 || q.count % chans != 0)
    throw format_error("quantized tensor channel layout corrupt");
  const std::vector<std::uint32_t> codes = unpack_bits(q.codes, q.bits, q.count);
  Tensor w(q.shape);
  if (w.size() != q.count) throw format_error("quantized tensor shape/count mismatch");
  const std::size_t per = q.count / chans;
  for (std::size_t c = 0; c < chans; ++c) {
    const float lo = q.w_min[c], s = q.scale[c];
    float* p = w.data() + c * per;
    for (std::size_t i = 0; i < per; ++i)
      p[i] = s * static_cast<float>(codes[c * per + i]) + lo;
  }
  return w;
}

Tensor fake_quant_tensor(const Tensor& w, const QuantPolicy& policy) {
  return dequantize(quantize(w, policy));
}

ValueT<float> fake_quant(const ValueT<float>& w, const QuantPolicy& policy) {
  Tensor out = fake_quant_tensor(w.value(), policy);
  return ag::make_op<float>("fake_quant", std::move(out), {w}, [](NodeT<float>& self) {
    if (auto* g = ag::grad_sink(self.parents[0]))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i];
  });
}

}  // namespace nervc
