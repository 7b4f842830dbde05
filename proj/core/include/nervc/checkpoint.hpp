// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NERVC_CHECKPOINT_HPP
#define NERVC_CHECKPOINT_HPP

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "nervc/model.hpp"
#include "nervc/quant.hpp"
#include "nervc/tensor.hpp"
#include "nervc/variant.hpp"

namespace nervc {

// On-disk model container. Layout, little-endian throughout:
//
//   "NRVCKPT1"            8-byte magic
//   header length         uint32
//   header                JSON (sorted keys, compact) describing the
//                         variant, precision, and every tensor in order
//   calibration region    for each code-packed tensor: per-channel minima
//                         then per-channel step sizes, float32
//   payload region        tensor data in header order: raw float32 for
//                         dense entries, packed codes for quantized ones
//
// Quantized files pack only the weight tensors; biases stay float32 in the
// payload. Saving, loading and saving again reproduces the file byte for
// byte.
struct Checkpoint {
  struct Entry {
    std::string name;
    bool codes = false;
    Tensor dense;       // when !codes
    QuantizedTensor q;  // when codes

    const std::vector<std::size_t>& shape() const {
      return codes ? q.shape : dense.shape();
    }
    std::size_t payload_bytes() const {
      return codes ? q.packed_bytes() : 4 * dense.size();
    }
  };

  int format = 1;
  VariantConfig variant;
  bool quantized = false;
  QuantPolicy policy;  // meaningful when quantized
  std::vector<Entry> entries;
  std::map<std::string, std::string> meta;

  std::size_t payload_bytes() const;
  std::size_t calibration_bytes() const;

  // Snapshot of trained parameters, full precision.
  static Checkpoint from_params(ModelParams& params);
  // Post-training quantization of the weight tensors under `policy`.
  static Checkpoint from_params_quantized(ModelParams& params,
                                          const QuantPolicy& policy);
  // Rebuilds runnable parameters, dequantizing code-packed entries.
  ModelParams to_params() const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace nervc

#endif  // NERVC_CHECKPOINT_HPP
