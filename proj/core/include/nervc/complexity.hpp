// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NERVC_COMPLEXITY_HPP
#define NERVC_COMPLEXITY_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nervc/variant.hpp"

namespace nervc {

// Static per-frame decode cost of a variant. Multiplication counts are exact
// integers: a convolution over an HxW grid costs HW * C_out * (k*k*C_in)
// multiplies; the pixel shuffles and activations are not counted. GFLOPs is
// 2*Mult/1e9 (one multiply + one add), divided once per figure so the totals
// carry no accumulation drift. The stem MLP is excluded from the cost rows,
// which cover the convolution stack only; parameters count the whole model.
struct StageCost {
  std::string label;  // "block1".."block5" or "head"
  std::size_t grid_h = 0, grid_w = 0;
  std::size_t c_in = 0;
  std::size_t c_out = 0;  // conv output channels (pre-shuffle)
  std::uint64_t mults = 0;
  double gflops = 0.0;
};

struct ComplexityReport {
  std::string variant;
  std::size_t out_h = 0, out_w = 0;
  std::vector<StageCost> stages;
  std::uint64_t total_mults = 0;
  double total_gflops = 0.0;
  std::size_t param_count = 0;

  std::string table() const;
  void write_csv(std::ostream& os) const;
};

// Cost of cfg with its seed grid multiplied by `scale`.
ComplexityReport analyze(const VariantConfig& cfg, std::size_t scale = 1);

// Learnable scalar count, a pure function of the config.
std::size_t parameter_count(const VariantConfig& cfg);

}  // namespace nervc

#endif  // NERVC_COMPLEXITY_HPP
