// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NERVC_SYNTH_HPP
#define NERVC_SYNTH_HPP

#include <cstddef>
#include <cstdint>

#include "nervc/dataset.hpp"

namespace nervc {

// Procedural test clip: slow sinusoidal color washes, a moving soft blob,
// and a fine ripple texture whose strength is set by `detail`. Every pixel
// is snapped to the 8-bit grid, so writing the clip as PPM and reading it
// back reproduces it exactly.
struct SynthSpec {
  std::size_t width = 320;
  std::size_t height = 180;
  std::size_t count = 16;
  std::uint64_t seed = 7;
  double detail = 1.0;
};

VideoDataset make_synth_video(const SynthSpec& spec);

}  // namespace nervc

#endif  // NERVC_SYNTH_HPP
