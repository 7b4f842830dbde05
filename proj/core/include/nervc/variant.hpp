// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NERVC_VARIANT_HPP
#define NERVC_VARIANT_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace nervc {

// Full architectural description of one decoder variant. The decoder is a
// positional encoding, a two-layer MLP stem, a stack of
// conv3x3 -> pixel_shuffle -> GELU blocks, and a 1x1 RGB head.
//
// Built-in names:
//   T, T+, S          five blocks, strides (5,2,2,2,2), output 720x1280
//   T-desk, T+-desk, S-desk
//                     same widths, first three blocks only -> 180x320;
//                     small enough to train on a laptop CPU in minutes
struct VariantConfig {
  std::string name;
  std::size_t stem_hidden = 0;
  std::size_t seed_channels = 0;
  std::size_t seed_h = 9;
  std::size_t seed_w = 16;
  std::vector<std::size_t> stage_widths;  // post-shuffle channels per block
  std::vector<std::size_t> strides;       // prefix of (5,2,2,2,2)
  std::size_t kernel = 3;
  double pe_base = 1.25;
  std::size_t pe_levels = 80;

  std::size_t pe_dim() const { return 2 * pe_levels; }
  std::size_t num_blocks() const { return strides.size(); }
  std::size_t seed_len() const { return seed_channels * seed_h * seed_w; }

  std::pair<std::size_t, std::size_t> output_size() const {
    std::size_t h = seed_h, w = seed_w;
    for (std::size_t s : strides) {
      h *= s;
      w *= s;
    }
    return {h, w};
  }

  // Channel count entering block i (0-based).
  std::size_t block_in_channels(std::size_t i) const {
    return i == 0 ? seed_channels : stage_widths[i - 1];
  }
  // Channel count the block's convolution emits, before the shuffle.
  std::size_t block_conv_channels(std::size_t i) const {
    return stage_widths[i] * strides[i] * strides[i];
  }

  // Same architecture on a grid-multiplied seed.
  VariantConfig scaled(std::size_t g) const;

  // Throws config_error when the description is not a valid decoder.
  void validate() const;
};

// Table configurations by name; throws config_error for unknown names.
VariantConfig make_variant(const std::string& name);
std::vector<std::string> builtin_variant_names();

// Plain-text key=value serialization, e.g.
//   name=T-desk
//   stem_hidden=256
//   seed_channels=16
//   seed_grid=9x16
//   stage_widths=16,32,32
//   strides=5,2,2
//   pe_base=1.25
//   pe_levels=80
VariantConfig load_variant_file(const std::string& path);
void save_variant_file(const VariantConfig& cfg, const std::string& path);

bool operator==(const VariantConfig& a, const VariantConfig& b);

}  // namespace nervc

#endif  // NERVC_VARIANT_HPP
