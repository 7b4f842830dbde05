// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nervc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <memory>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "nervc/complexity.hpp"
#include "nervc/errors.hpp"
#include "nervc/rng.hpp"

namespace nervc {

namespace {

// Stream-splitting constants so the shuffle order and the adapter init are
// independent of the parameter init stream ("SHUFFLE1" / "ADAPTER1").
constexpr std::uint64_t kShuffleSalt = 0x53485546464C4531ull;
constexpr std::uint64_t kAdapterSalt = 0x4144415054455231ull;

struct AdamState {
  Tensor m, v;
};

class Adam {
 public:
  explicit Adam(std::vector<ValueT<float>*> params) : params_(std::move(params)) {
    state_.reserve(params_.size());
    for (auto* p : params_)
      state_.push_back({Tensor(p->value().shape()), Tensor(p->value().shape())});
  }

  void step(double lr) {
    ++t_;
    const float c1 = static_cast<float>(1.0 - std::pow(0.9, t_));
    const float c2 = static_cast<float>(1.0 - std::pow(0.999, t_));
    const float flr = static_cast<float>(lr);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor& w = params_[i]->value();
      const Tensor& g = params_[i]->grad();
      Tensor& m = state_[i].m;
      Tensor& v = state_[i].v;
      for (std::size_t j = 0; j < w.size(); ++j) {
        m[j] = 0.9f * m[j] + 0.1f * g[j];
        v[j] = 0.999f * v[j] + 0.001f * g[j] * g[j];
        const float mh = m[j] / c1;
        const float vh = v[j] / c2;
        w[j] -= flr * mh / (std::sqrt(vh) + 1e-8f);
      }
    }
  }

 private:
  std::vector<ValueT<float>*> params_;
  std::vector<AdamState> state_;
  int t_ = 0;
};

double cosine_lr(double peak, std::size_t step, std::size_t total) {
  const double frac = static_cast<double>(step) / static_cast<double>(total);
  return peak * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

void check_data_shape(const VideoDataset& data, const VariantConfig& cfg) {
  if (data.count() == 0) throw input_error("clip has no frames");
  const auto [h, w] = cfg.output_size();
  for (const Tensor& f : data.frames)
    if (f.rank() != 3 || f.extent(0) != 3 || f.extent(1) != h || f.extent(2) != w)
      throw config_error("frame shape " + f.shape_str() + " does not match the " +
                         cfg.name + " output [3," + std::to_string(h) + "," +
                         std::to_string(w) + "]");
}

// One gradient step over a batch of frame indices. Templated over the engine
// so plain and fake-quantized training share every line.
template <typename Engine>
struct Trainer {
  const Engine& eng;
  const VideoDataset& data;
  ModelParams& params;
  const TrainOptions& opt;
  TeacherCache* teacher;  // null in plain mode
  AdapterParams* adapters;
  bool plain;

  struct StepOut {
    double loss, recon, kd;
  };

  StepOut run(const std::vector<std::size_t>& batch, std::size_t step_index) {
    params.zero_grad();
    if (adapters) adapters->zero_grad();

    ValueT<float> total;
    double recon_acc = 0.0, kd_acc = 0.0;
    for (std::size_t frame : batch) {
      std::vector<ValueT<float>> feats;
      const bool want_feats =
          !plain && opt.kd.mode == KDConfig::Mode::feature;
      auto pred = model_forward(eng, params, data.times[frame],
                                want_feats ? &feats : nullptr);

      KDExtras<float> ex;
      ValueT<float> student_prev;
      std::vector<Tensor> teacher_feats_local;
      if (!plain) {
        switch (opt.kd.mode) {
          case KDConfig::Mode::final:
          case KDConfig::Mode::freq:
          case KDConfig::Mode::freq_focal:
            ex.teacher_pred = &teacher->pred(frame);
            break;
          case KDConfig::Mode::temporal:
            if (frame >= opt.kd.delta) {
              const std::size_t prev = frame - opt.kd.delta;
              student_prev = model_forward(eng, params, data.times[prev]);
              ex.student_prev = &student_prev;
              ex.teacher_pred = &teacher->pred(frame);
              ex.teacher_prev = &teacher->pred(prev);
            } else {
              ex.temporal_pair_available = false;
            }
            break;
          case KDConfig::Mode::feature:
            ex.student_feats = &feats;
            ex.teacher_feats = &teacher->features(frame);
            ex.adapters = adapters;
            break;
          case KDConfig::Mode::none:
            break;
        }
      }

      LossParts<float> parts;
      auto li = total_loss(pred, data.frames[frame], opt.kd, ex, opt.beta, &parts);
      recon_acc += parts.recon.item();
      if (parts.kd.defined()) kd_acc += parts.kd.item();
      total = total.defined() ? add(total, li) : li;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    total = scale(total, inv);

    const double loss_val = total.item();
    if (!std::isfinite(loss_val))
      throw error("training diverged at step " + std::to_string(step_index + 1) +
                  " (loss = " + std::to_string(loss_val) + ")");
    backward(total);
    return {loss_val, recon_acc * inv, kd_acc * inv};
  }
};

template <typename Engine>
TrainStats train_loop(const Engine& eng, const VideoDataset& data,
                      ModelParams& params, const TrainOptions& opt,
                      TeacherCache* teacher, AdapterParams* adapters, bool plain) {
  std::vector<ValueT<float>*> trainable;
  for (auto& p : params.named()) trainable.push_back(p.value);
  if (adapters)
    for (auto& ad : adapters->adapters) {
      trainable.push_back(&ad.w);
      trainable.push_back(&ad.b);
    }
  Adam adam(std::move(trainable));

  Rng shuffle_rng(opt.seed ^ kShuffleSalt);
  std::vector<std::size_t> order(data.count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();  // forces a shuffle before first use

  Trainer<Engine> trainer{eng, data, params, opt, teacher, adapters, plain};

  if (opt.step_csv) *opt.step_csv << "step,lr,loss,recon,kd\n";

  TrainStats stats;
  std::vector<std::size_t> batch;
  for (std::size_t step = 0; step < opt.steps; ++step) {
    if (cursor >= order.size()) {
      shuffle_rng.shuffle(order);
      cursor = 0;
    }
    batch.clear();
    while (batch.size() < opt.batch && cursor < order.size())
      batch.push_back(order[cursor++]);

    const double lr = cosine_lr(opt.lr, step, opt.steps);
    const auto out = trainer.run(batch, step);
    adam.step(lr);

    stats.steps = step + 1;
    stats.final_loss = out.loss;
    stats.final_recon = out.recon;
    stats.final_kd = out.kd;

    if (opt.step_csv)
      *opt.step_csv << step + 1 << "," << std::setprecision(10) << lr << ","
                    << out.loss << "," << out.recon << "," << out.kd << "\n";
    if (opt.progress && ((step + 1) % opt.log_every == 0 || step + 1 == opt.steps)) {
      std::ostringstream line;
      line << "step " << step + 1 << "/" << opt.steps << "  lr " << std::scientific
           << std::setprecision(3) << lr << "  loss " << std::fixed
           << std::setprecision(5) << out.loss << " (recon " << out.recon
           << ", kd " << out.kd << ")";
      *opt.progress << line.str() << "\n";
    }
    if (opt.snapshot_every != 0 && opt.on_snapshot &&
        (step + 1) % opt.snapshot_every == 0)
      opt.on_snapshot(step + 1, params);
  }

  if (!params.all_finite())
    throw error("parameters became non-finite during training");
  return stats;
}

}  // namespace

TeacherCache::TeacherCache(const ModelParams& teacher, std::vector<float> times,
                           bool keep_features)
    : teacher_(teacher),
      times_(std::move(times)),
      keep_features_(keep_features),
      ready_(times_.size(), false),
      preds_(times_.size()),
      feats_(times_.size()) {}

void TeacherCache::render(std::size_t frame) {
  if (frame >= times_.size()) throw usage_error("teacher frame index out of range");
  if (ready_[frame]) return;
  RawEngine eng;
  if (keep_features_) {
    preds_[frame] = model_forward(eng, teacher_, times_[frame], &feats_[frame]);
  } else {
    preds_[frame] = model_forward(eng, teacher_, times_[frame]);
  }
  ready_[frame] = true;
}

const Tensor& TeacherCache::pred(std::size_t frame) {
  render(frame);
  return preds_[frame];
}

const std::vector<Tensor>& TeacherCache::features(std::size_t frame) {
  if (!keep_features_) throw usage_error("teacher cache built without feature taps");
  render(frame);
  return feats_[frame];
}

TrainStats train_model(const VideoDataset& data, ModelParams& params,
                       const TrainOptions& opt, const ModelParams* teacher) {
  if (opt.batch == 0) throw config_error("batch must be >= 1");
  if (!(opt.lr > 0.0)) throw config_error("learning rate must be positive");
  if (opt.log_every == 0) throw config_error("log_every must be >= 1");
  if (opt.beta < 0.0 || opt.beta > 1.0) throw config_error("beta must be in [0,1]");
  opt.kd.validate();
  if (opt.qat) opt.quant.validate();
  check_data_shape(data, params.cfg);

  const bool plain =
      opt.kd.mode == KDConfig::Mode::none || opt.kd.lambda_kd == 0.0;
  TeacherCache* cache = nullptr;
  std::unique_ptr<TeacherCache> cache_owner;
  std::unique_ptr<AdapterParams> adapters;
  if (!plain) {
    if (!teacher) throw usage_error("this distillation mode needs a teacher");
    const auto [sh, sw] = params.cfg.output_size();
    const auto [th, tw] = teacher->cfg.output_size();
    if (sh != th || sw != tw)
      throw config_error("teacher decodes " + std::to_string(tw) + "x" +
                         std::to_string(th) + ", student needs " +
                         std::to_string(sw) + "x" + std::to_string(sh));
    const bool feats = opt.kd.mode == KDConfig::Mode::feature;
    cache_owner = std::make_unique<TeacherCache>(*teacher, data.times, feats);
    cache = cache_owner.get();
    if (feats) {
      adapters = std::make_unique<AdapterParams>(AdapterParams::init(
          params.cfg, teacher->cfg, resolve_feature_stages(opt.kd, params.cfg),
          opt.seed ^ kAdapterSalt));
    }
  }

  if (opt.qat) {
    QatEngine eng(opt.quant);
    return train_loop(eng, data, params, opt, cache, adapters.get(), plain);
  }
  AgEngine eng;
  return train_loop(eng, data, params, opt, cache, adapters.get(), plain);
}

std::vector<Tensor> decode_frames(const ModelParams& params,
                                  const std::vector<float>& times) {
  std::vector<Tensor> out;
  out.reserve(times.size());
  for (float t : times) out.push_back(decode_frame(params, t));
  return out;
}

MetricReport evaluate(const ModelParams& params, const VideoDataset& data,
                      const std::string& label) {
  check_data_shape(data, params.cfg);
  MetricReport r;
  r.label = label.empty() ? params.cfg.name : label;
  r.frame_count = data.count();

  const auto recon = decode_frames(params, data.times);
  double psnr_acc = 0.0, ms_acc = 0.0;
  for (std::size_t i = 0; i < recon.size(); ++i) {
    r.frame_psnr.push_back(psnr(recon[i], data.frames[i]));
    r.frame_ms_ssim.push_back(ms_ssim(recon[i], data.frames[i]));
    psnr_acc += r.frame_psnr.back();
    ms_acc += r.frame_ms_ssim.back();
  }
  r.mean_psnr = psnr_acc / static_cast<double>(recon.size());
  r.mean_ms_ssim = ms_acc / static_cast<double>(recon.size());
  if (recon.size() >= 2) {
    const auto [tp, ts] = temporal_metrics(recon, data.frames);
    r.t_psnr = tp;
    r.t_ssim = ts;
  }
  r.gflops = analyze(params.cfg).total_gflops;
  r.psnr_per_gflop = efficiency(r.mean_psnr, r.gflops);
  return r;
}

std::string BenchmarkResult::table() const {
  std::ostringstream os;
  os << variant << ": " << frames << " frames/run, " << runs << " runs ("
     << warmup << " warmup)\n"
     << std::fixed << std::setprecision(2) << "  median frame time  "
     << ms_per_frame << " ms\n"
     << "  throughput         " << std::setprecision(3) << fps << " fps\n"
     << "  analytic cost      " << std::setprecision(4) << gflops
     << " GFLOPs/frame\n"
     << "  achieved           " << std::setprecision(2) << gflops_per_sec
     << " GFLOP/s\n";
  return os.str();
}

BenchmarkResult benchmark_decode(const ModelParams& params, std::size_t frames,
                                 std::size_t warmup, std::size_t runs) {
  if (frames == 0 || runs == 0)
    throw config_error("benchmark needs at least one frame and one run");
  if (warmup == 0) throw config_error("benchmark needs at least one warmup pass");
  const std::vector<float> times = frame_times(frames);

  volatile float sink = 0.0f;  // keeps the decode from being optimized away
  for (std::size_t i = 0; i < warmup; ++i)
    for (float t : times) sink = sink + decode_frame(params, t)[0];

  std::vector<double> per_frame_ms;
  per_frame_ms.reserve(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    const auto start = std::chrono::steady_clock::now();
    for (float t : times) sink = sink + decode_frame(params, t)[0];
    const auto stop = std::chrono::steady_clock::now();
    const double ms =
        std::chrono::duration<double, std::milli>(stop - start).count();
    per_frame_ms.push_back(ms / static_cast<double>(frames));
  }
  std::sort(per_frame_ms.begin(), per_frame_ms.end());
  const std::size_t mid = per_frame_ms.size() / 2;
  const double median = per_frame_ms.size() % 2 == 1
                            ? per_frame_ms[mid]
                            : 0.5 * (per_frame_ms[mid - 1] + per_frame_ms[mid]);

  BenchmarkResult b;
  b.variant = params.cfg.name;
  b.frames = frames;
  b.warmup = warmup;
  b.runs = runs;
  b.ms_per_frame = median;
  b.fps = median > 0.0 ? 1000.0 / median : 0.0;
  b.gflops = analyze(params.cfg).total_gflops;
  b.gflops_per_sec = median > 0.0 ? b.gflops / (median / 1000.0) : 0.0;
  return b;
}

}  // namespace nervc
