// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NERVC_PIPELINE_HPP
#define NERVC_PIPELINE_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "nervc/dataset.hpp"
#include "nervc/loss.hpp"
#include "nervc/metrics.hpp"
#include "nervc/model.hpp"
#include "nervc/quant.hpp"

namespace nervc {

// One optimization run: Adam on the combined objective, cosine-decayed
// learning rate, frames revisited in a fresh shuffled order every epoch.
struct TrainOptions {
  std::uint64_t seed = 1;       // parameter init and shuffle streams
  std::size_t steps = 300;      // optimizer steps (the compute budget)
  std::size_t batch = 1;        // frames averaged into one step
  double lr = 5e-4;             // peak learning rate
  double beta = 0.7;            // L1 weight inside the reconstruction loss
  KDConfig kd;                  // mode none = plain coordinate fit
  bool qat = false;             // train against fake-quantized weights
  QuantPolicy quant;            // fake-quant policy when qat is set
  std::size_t log_every = 25;
  std::ostream* progress = nullptr;  // human-readable updates
  std::ostream* step_csv = nullptr;  // "step,lr,loss,recon,kd" rows
  // Periodic snapshots: called after every snapshot_every-th step (0 = never).
  std::size_t snapshot_every = 0;
  std::function<void(std::size_t step, ModelParams&)> on_snapshot;
};

struct TrainStats {
  std::size_t steps = 0;
  double final_loss = 0.0;
  double final_recon = 0.0;
  double final_kd = 0.0;
};

// Teacher decodes are deterministic, so each frame is rendered once and
// kept; feature taps are kept only when requested.
class TeacherCache {
 public:
  TeacherCache(const ModelParams& teacher, std::vector<float> times,
               bool keep_features);
  const Tensor& pred(std::size_t frame);
  const std::vector<Tensor>& features(std::size_t frame);
  const ModelParams& params() const { return teacher_; }

 private:
  void render(std::size_t frame);
  ModelParams teacher_;
  std::vector<float> times_;
  bool keep_features_;
  std::vector<bool> ready_;
  std::vector<Tensor> preds_;
  std::vector<std::vector<Tensor>> feats_;
};

// Optimizes `params` in place. With a teacher and an active KD mode this is
// distillation; with opt.qat it is quantization-aware fine-tuning. A
// non-finite loss aborts with an error naming the step. A KD mode with
// lambda 0, or mode none, follows exactly the plain-training trajectory.
TrainStats train_model(const VideoDataset& data, ModelParams& params,
                       const TrainOptions& opt,
                       const ModelParams* teacher = nullptr);

std::vector<Tensor> decode_frames(const ModelParams& params,
                                  const std::vector<float>& times);

// Per-frame PSNR / MS-SSIM, sequence-level temporal metrics, and the
// analytic decode cost of the variant.
MetricReport evaluate(const ModelParams& params, const VideoDataset& data,
                      const std::string& label = "");

// Wall-clock decode speed: each run decodes `frames` frames; the reported
// per-frame time is the median run.
struct BenchmarkResult {
  std::string variant;
  std::size_t frames = 0;
  std::size_t warmup = 0;
  std::size_t runs = 0;
  double ms_per_frame = 0.0;
  double fps = 0.0;
  double gflops = 0.0;          // analytic, per frame
  double gflops_per_sec = 0.0;  // achieved
  std::string table() const;
};

BenchmarkResult benchmark_decode(const ModelParams& params, std::size_t frames,
                                 std::size_t warmup, std::size_t runs);

}  // namespace nervc

#endif  // NERVC_PIPELINE_HPP
