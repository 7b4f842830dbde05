// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NERVC_QUANT_HPP
#define NERVC_QUANT_HPP

#include <cstdint>
#include <vector>

#include "nervc/autograd.hpp"
#include "nervc/tensor.hpp"

namespace nervc {

// Weights-only uniform min-max quantization.
//
// Per channel (rows = dim 0 of the weight tensor, the output channel):
//   s      = (w_max - w_min) / 2^b        from the observed range
//   code   = clamp(round((w - w_min)/s), 0, 2^b - 1)
//   w~     = s * code + w_min
//
// The 2^b denominator makes the channel maximum round to index 2^b, one past
// what b bits can hold, so that single top code clamps; its round-trip error
// is a full step s instead of s/2. A channel with zero range stores s = 0 and
// all-zero codes, reproducing the constant exactly.
//
// Quantization grids nest: every level at bit-width b is also a level at
// b+1 (i * range/2^b == 2i * range/2^(b+1)), so per-element round-trip error
// never increases with b. Activations and biases are never quantized.

struct QuantPolicy {
  int bits = 8;             // 2..8
  bool per_channel = true;  // per-tensor otherwise (ablation)

  void validate() const;  // throws config_error on a bad bit-width
};

struct QuantizedTensor {
  int bits = 0;
  bool per_channel = true;
  std::vector<std::size_t> shape;
  std::size_t count = 0;             // elements overall
  std::vector<float> w_min;          // one per channel
  std::vector<float> scale;          // one per channel
  std::vector<std::uint8_t> codes;   // bit-packed, LSB first

  std::size_t channels() const { return w_min.size(); }
  std::size_t packed_bytes() const { return codes.size(); }
};

QuantizedTensor quantize(const Tensor& w, const QuantPolicy& policy);
Tensor dequantize(const QuantizedTensor& q);

// quantize-then-dequantize in one step.
Tensor fake_quant_tensor(const Tensor& w, const QuantPolicy& policy);

// Codes packed little-endian within the bit stream: code i occupies stream
// bits [i*b, (i+1)*b), and stream bit j lives at byte j/8, bit j%8. Total
// ceil(count*b/8) bytes; b == 8 degenerates to one byte per code.
std::vector<std::uint8_t> pack_bits(const std::vector<std::uint32_t>& codes, int bits);
std::vector<std::uint32_t> unpack_bits(const std::vector<std::uint8_t>& bytes, int bits,
                                       std::size_t count);

// Fake-quantization graph op: forward is exactly the quantize/dequantize
// image of w; backward passes the gradient through unchanged (straight-
// through estimator), so the optimizer keeps updating full-precision
// weights. Ranges are re-observed from the live weights on every call.
ValueT<float> fake_quant(const ValueT<float>& w, const QuantPolicy& policy);

}  // namespace nervc

#endif  // NERVC_QUANT_HPP
