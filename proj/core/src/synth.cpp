// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nervc/synth.hpp"

#include <cmath>
#include <numbers>

#include "nervc/errors.hpp"
#include "nervc/rng.hpp"

namespace nervc {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

float snap8(double v) {
  const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<float>(std::nearbyint(c * 255.0) / 255.0);
}

}  // namespace

VideoDataset make_synth_video(const SynthSpec& spec) {
  if (spec.width == 0 || spec.height == 0 || spec.count == 0)
    throw input_error("synth clip needs positive width, height and count");

  Rng rng(spec.seed);
  // Per-channel wave parameters, drawn once so the clip is a pure function
  // of the spec.
  double f1x[3], f1y[3], p1[3], f2x[3], f2y[3], p2[3], ph[3], blob_a[3];
  for (int c = 0; c < 3; ++c) {
    f1x[c] = rng.uniform(0.8, 1.8);
    f1y[c] = rng.uniform(0.8, 1.8);
    p1[c] = rng.uniform();
    f2x[c] = rng.uniform(1.8, 3.0);
    f2y[c] = rng.uniform(1.8, 3.0);
    p2[c] = rng.uniform();
    ph[c] = rng.uniform();
    blob_a[c] = rng.uniform(0.22, 0.34);
  }
  const double hfx = rng.uniform(9.0, 13.0);
  const double hfy = rng.uniform(9.0, 13.0);
  const double pb1 = rng.uniform();
  const double pb2 = rng.uniform();

  const double aspect = static_cast<double>(spec.height) / static_cast<double>(spec.width);
  const double sigma = 0.085;
  const double hf_amp = 0.05 * spec.detail;

  VideoDataset ds;
  ds.width = spec.width;
  ds.height = spec.height;
  ds.times = frame_times(spec.count);
  ds.frames.reserve(spec.count);

  for (std::size_t f = 0; f < spec.count; ++f) {
    const double tt = static_cast<double>(ds.times[f]);
    const double cx = 0.5 + 0.3 * std::sin(kTau * (0.9 * tt + pb1));
    const double cy = 0.5 + 0.3 * std::cos(kTau * (0.7 * tt + pb2));

    Tensor frame({3, spec.height, spec.width});
    for (std::size_t y = 0; y < spec.height; ++y) {
      const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(spec.height);
      for (std::size_t x = 0; x < spec.width; ++x) {
        const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(spec.width);
        const double du = u - cx;
        const double dv = (v - cy) * aspect;
        const double blob = std::exp(-(du * du + dv * dv) / (2.0 * sigma * sigma));
        const double ripple =
            hf_amp * std::sin(kTau * (hfx * u + hfy * v + 0.5 * tt));
        for (int c = 0; c < 3; ++c) {
          const double wash =
              0.22 * std::sin(kTau * (f1x[c] * u + f1y[c] * v + p1[c] + 0.35 * tt)) +
              0.14 * std::cos(kTau * (f2x[c] * u - f2y[c] * v + p2[c] - 0.22 * tt));
          const double val = 0.5 + wash + ripple + blob_a[c] * blob;
          frame[(static_cast<std::size_t>(c) * spec.height + y) * spec.width + x] =
              snap8(val);
        }
      }
    }
    ds.frames.push_back(std::move(frame));
  }
  return ds;
}

}  // namespace nervc
