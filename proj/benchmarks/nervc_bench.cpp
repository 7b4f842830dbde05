// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the kernels that dominate decode and training time.

#include <benchmark/benchmark.h>

#include "nervc/model.hpp"
#include "nervc/nn_kernels.hpp"
#include "nervc/quant.hpp"
#include "nervc/rng.hpp"
#include "nervc/tensor.hpp"
#include "nervc/variant.hpp"

namespace {

using namespace nervc;

Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

// The T variant's third block: 32 -> 128 channels over a 90x160 grid.
void BM_Conv3x3Block(benchmark::State& state) {
  const Tensor x = random_tensor({32, 90, 160}, 1);
  const Tensor w = random_tensor({128, 32, 3, 3}, 2);
  const Tensor b = random_tensor({128}, 3);
  Tensor y;
  for (auto _ : state) {
    kernels::conv2d_forward(x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * 128 * 90 * 160);
}
BENCHMARK(BM_Conv3x3Block)->Unit(benchmark::kMillisecond);

// The 1x1 head at T-desk output resolution.
void BM_Conv1x1Head(benchmark::State& state) {
  const Tensor x = random_tensor({32, 180, 320}, 1);
  const Tensor w = random_tensor({3, 32, 1, 1}, 2);
  const Tensor b = random_tensor({3}, 3);
  Tensor y;
  for (auto _ : state) {
    kernels::conv2d_forward(x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_Conv1x1Head)->Unit(benchmark::kMillisecond);

void BM_PixelShuffle(benchmark::State& state) {
  const Tensor x = random_tensor({128, 90, 160}, 1);
  Tensor y;
  for (auto _ : state) {
    kernels::pixel_shuffle_forward(x, 2, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_PixelShuffle)->Unit(benchmark::kMicrosecond);

void BM_GaussianBlur(benchmark::State& state) {
  const Tensor x = random_tensor({3, 180, 320}, 1);
  const auto taps = kernels::gaussian_taps<float>(1.0, 3);
  Tensor y;
  for (auto _ : state) {
    kernels::blur_forward(x, taps, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_GaussianBlur)->Unit(benchmark::kMicrosecond);

void BM_PackCodes(benchmark::State& state) {
  const int bits = static_cast<int>(state.range(0));
  std::vector<std::uint32_t> codes(1 << 20);
  Rng rng(9);
  for (auto& c : codes)
    c = static_cast<std::uint32_t>(rng.bounded(1u << bits));
  for (auto _ : state) {
    auto packed = pack_bits(codes, bits);
    benchmark::DoNotOptimize(packed.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(codes.size()));
}
BENCHMARK(BM_PackCodes)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_DecodeFrameTDesk(benchmark::State& state) {
  ModelParams params = ModelParams::init(make_variant("T-desk"), 1);
  double t = 0.0;
  for (auto _ : state) {
    Tensor frame = decode_frame(params, t);
    benchmark::DoNotOptimize(frame.data());
    t = t < 0.5 ? t + 0.25 : 0.0;
  }
}
BENCHMARK(BM_DecodeFrameTDesk)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
