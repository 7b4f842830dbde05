// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NERVC_LOSS_HPP
#define NERVC_LOSS_HPP

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "nervc/autograd.hpp"
#include "nervc/nn_kernels.hpp"
#include "nervc/nn_ops.hpp"
#include "nervc/rng.hpp"
#include "nervc/variant.hpp"

// Training objectives. The student prediction is a graph value; ground truth
// and everything teacher-side are plain tensors, so by construction no
// gradient can reach the teacher.

namespace nervc {

struct KDConfig {
  enum class Mode { none, final, freq, freq_focal, temporal, feature };

  Mode mode = Mode::none;
  double lambda_kd = 1.0;      // teacher guidance strength
  double alpha = 2.0;          // high-band weight in the frequency losses
  double gamma = 1.0;          // focal exponent
  double sigma = 1.0;          // band-split Gaussian std (pixels)
  std::size_t kernel_radius = 3;
  std::size_t delta = 1;       // temporal step, in frames
  std::vector<std::size_t> feature_stages;  // 1-based blocks; empty = 2..N
  double weight_floor = 0.1;
  double eps = 1e-8;

  void validate() const {
    if (lambda_kd < 0.0) throw config_error("lambda_kd must be >= 0");
    if (alpha < 0.0) throw config_error("alpha must be >= 0");
    if (gamma < 0.0) throw config_error("gamma must be >= 0");
    if (!(sigma > 0.0)) throw config_error("sigma must be positive");
    // >= 3 sigma of taps keeps at least 99.7% of the kernel mass.
    if (static_cast<double>(kernel_radius) < std::ceil(3.0 * sigma))
      throw config_error("kernel_radius must be at least ceil(3*sigma)");
    if (delta < 1) throw config_error("temporal delta must be >= 1");
  }

  static Mode parse_mode(const std::string& s) {
    if (s == "none") return Mode::none;
    if (s == "final") return Mode::final;
    if (s == "freq") return Mode::freq;
    if (s == "freq_focal" || s == "freq-focal") return Mode::freq_focal;
    if (s == "temporal") return Mode::temporal;
    if (s == "feature") return Mode::feature;
    throw config_error("unknown distillation mode '" + s + "'");
  }

  std::string mode_name() const {
    switch (mode) {
      case Mode::none: return "none";
      case Mode::final: return "final";
      case Mode::freq: return "freq";
      case Mode::freq_focal: return "freq_focal";
      case Mode::temporal: return "temporal";
      case Mode::feature: return "feature";
    }
    return "none";
  }
};

// ---------------------------------------------------------------------------
// Small helpers.

template <typename S>
TensorT<S> blur_tensor(const TensorT<S>& x, double sigma, std::size_t radius) {
  TensorT<S> y;
  kernels::blur_forward(x, kernels::gaussian_taps<S>(sigma, radius), y);
  return y;
}

// mean |a - target|
template <typename S>
ValueT<S> l1_to(const ValueT<S>& a, const TensorT<S>& target) {
  if (!a.value().same_shape(target))
    throw input_error("L1 shape mismatch " + a.value().shape_str() + " vs " +
                      target.shape_str());
  return mean(abs(sub(a, ValueT<S>::constant(target))));
}

// Single-scale SSIM between a predicted frame and a fixed target, usable as
// a loss term. 11x11 Gaussian window, sigma 1.5, C1=1e-4, C2=9e-4 for unit
// peak; channels are treated as independent planes and averaged.
template <typename S>
ValueT<S> ssim_to(const ValueT<S>& x, const TensorT<S>& y, double peak = 1.0) {
  if (!x.value().same_shape(y))
    throw input_error("SSIM shape mismatch " + x.value().shape_str() + " vs " +
                      y.shape_str());
  const double c1 = 0.01 * peak * 0.01 * peak;
  const double c2 = 0.03 * peak * 0.03 * peak;
  const double sigma = 1.5;
  const std::size_t radius = 5;

  auto taps = kernels::gaussian_taps<S>(sigma, radius);
  auto blur_v = [&taps](const ValueT<S>& v) {
    TensorT<S> out;
    kernels::blur_forward(v.value(), taps, out);
    return ag::make_op<S>("blur", std::move(out), {v},
                          [taps](NodeT<S>& self) {
                            if (auto* g = ag::grad_sink(self.parents[0]))
                              kernels::blur_adjoint(self.grad, taps, *g);
                          });
  };
  auto blur_t = [&taps](const TensorT<S>& t) {
    TensorT<S> out;
    kernels::blur_forward(t, taps, out);
    return out;
  };

  TensorT<S> mu_y = blur_t(y);
  TensorT<S> yy(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) yy[i] = y[i] * y[i];
  TensorT<S> mu_yy = blur_t(yy);
  TensorT<S> sigma_yy(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i)
    sigma_yy[i] = mu_yy[i] - mu_y[i] * mu_y[i];

  auto Yc = ValueT<S>::constant(y);
  auto mu_yc = ValueT<S>::constant(mu_y);

  auto mu_x = blur_v(x);
  auto sigma_xx = sub(blur_v(mul(x, x)), mul(mu_x, mu_x));
  auto sigma_xy = sub(blur_v(mul(x, Yc)), mul(mu_x, mu_yc));

  auto num = mul(shift(scale(mul(mu_x, mu_yc), 2.0), c1),
                 shift(scale(sigma_xy, 2.0), c2));
  auto den = mul(shift(add(mul(mu_x, mu_x), mul(mu_yc, mu_yc)), c1),
                 shift(add(sigma_xx, ValueT<S>::constant(sigma_yy)), c2));
  return mean(div(num, den));
}

// ---------------------------------------------------------------------------
// Objectives.

// beta * L1 + (1 - beta) * (1 - SSIM)
template <typename S>
ValueT<S> recon_loss(const ValueT<S>& pred, const TensorT<S>& gt, double beta = 0.7) {
  auto dssim = shift(scale(ssim_to(pred, gt), -1.0), 1.0);
  return add(scale(l1_to(pred, gt), beta), scale(dssim, 1.0 - beta));
}

template <typename S>
ValueT<S> kd_final(const ValueT<S>& student, const TensorT<S>& teacher) {
  return l1_to(student, teacher);
}

// Low band by Gaussian blur, high band by subtraction; low + high
// reconstructs the input up to rounding.
template <typename S>
std::pair<ValueT<S>, ValueT<S>> freq_split(const ValueT<S>& x, double sigma,
                                           std::size_t radius) {
  auto taps = kernels::gaussian_taps<S>(sigma, radius);
  TensorT<S> out;
  kernels::blur_forward(x.value(), taps, out);
  auto low = ag::make_op<S>("blur", std::move(out), {x},
                            [taps = std::move(taps)](NodeT<S>& self) {
                              if (auto* g = ag::grad_sink(self.parents[0]))
                                kernels::blur_adjoint(self.grad, taps, *g);
                            });
  auto high = sub(x, low);
  return {low, high};
}

template <typename S>
std::pair<TensorT<S>, TensorT<S>> freq_split(const TensorT<S>& x, double sigma,
                                             std::size_t radius) {
  TensorT<S> low = blur_tensor(x, sigma, radius);
  TensorT<S> high(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) high[i] = x[i] - low[i];
  return {std::move(low), std::move(high)};
}

template <typename S>
ValueT<S> kd_freq(const ValueT<S>& student, const TensorT<S>& teacher, double alpha,
                  double sigma, std::size_t radius) {
  auto [s_low, s_high] = freq_split(student, sigma, radius);
  auto [t_low, t_high] = freq_split(teacher, sigma, radius);
  return add(l1_to(s_low, t_low), scale(l1_to(s_high, t_high), alpha));
}

// Per-pixel focal map from the high-band disagreement. The magnitudes are
// averaged over color channels, normalized by the worst pixel, raised to
// gamma, and floored so well-matched regions keep some supervision. The map
// is plain data: no gradient flows through it.
template <typename S>
TensorT<S> focal_weights(const TensorT<S>& s_high, const TensorT<S>& t_high,
                         double gamma, double weight_floor = 0.1, double eps = 1e-8) {
  if (!s_high.same_shape(t_high) || s_high.rank() != 3)
    throw input_error("focal_weights expects matching [C,H,W] bands");
  const std::size_t c = s_high.extent(0);
  const std::size_t hw = s_high.extent(1) * s_high.extent(2);
  TensorT<S> e({s_high.extent(1), s_high.extent(2)});
  for (std::size_t ci = 0; ci < c; ++ci)
    for (std::size_t i = 0; i < hw; ++i)
      e[i] += std::abs(static_cast<double>(s_high[ci * hw + i]) -
                       static_cast<double>(t_high[ci * hw + i])) /
              static_cast<double>(c);
  double emax = 0.0;
  for (std::size_t i = 0; i < hw; ++i)
    emax = std::max(emax, static_cast<double>(e[i]));
  TensorT<S> w(e.shape());
  for (std::size_t i = 0; i < hw; ++i)
    w[i] = static_cast<S>(
        std::pow(static_cast<double>(e[i]) / (emax + eps), gamma) + weight_floor);
  return w;
}

template <typename S>
ValueT<S> kd_freq_focal(const ValueT<S>& student, const TensorT<S>& teacher,
                        double alpha, double gamma, double sigma, std::size_t radius,
                        double weight_floor = 0.1, double eps = 1e-8) {
  auto [s_low, s_high] = freq_split(student, sigma, radius);
  auto [t_low, t_high] = freq_split(teacher, sigma, radius);
  TensorT<S> w = focal_weights(s_high.value(), t_high, gamma, weight_floor, eps);
  auto weighted = mean(abs(weight_map_mul(sub(s_high, ValueT<S>::constant(t_high)), w)));
  return add(l1_to(s_low, t_low), scale(weighted, alpha));
}

// || (S_t - S_{t-d}) - (T_t - T_{t-d}) ||_1
template <typename S>
ValueT<S> kd_temporal(const ValueT<S>& s_cur, const ValueT<S>& s_prev,
                      const TensorT<S>& t_cur, const TensorT<S>& t_prev) {
  if (!t_cur.same_shape(t_prev))
    throw input_error("temporal KD teacher frames differ in shape");
  TensorT<S> t_diff(t_cur.shape());
  for (std::size_t i = 0; i < t_diff.size(); ++i) t_diff[i] = t_cur[i] - t_prev[i];
  return l1_to(sub(s_cur, s_prev), t_diff);
}

// ---------------------------------------------------------------------------
// Feature distillation: 1x1 adapters lift student stage widths onto teacher
// widths. Trained jointly with the student, discarded at inference.

template <typename S>
struct AdapterParamsT {
  std::vector<std::size_t> stages;  // 1-based block indices
  struct Adapter {
    ValueT<S> w, b;
  };
  std::vector<Adapter> adapters;

  static AdapterParamsT init(const VariantConfig& student, const VariantConfig& teacher,
                             std::vector<std::size_t> stage_list, std::uint64_t seed) {
    if (stage_list.empty())
      throw config_error("feature distillation needs at least one stage");
    const std::size_t shared = std::min(student.num_blocks(), teacher.num_blocks());
    std::size_t sg_h = student.seed_h, sg_w = student.seed_w;
    std::size_t tg_h = teacher.seed_h, tg_w = teacher.seed_w;
    AdapterParamsT a;
    a.stages = std::move(stage_list);
    Rng rng(seed);
    for (std::size_t idx = 0; idx < a.stages.size(); ++idx) {
      const std::size_t st = a.stages[idx];
      if (st < 1 || st > shared)
        throw config_error("feature stage " + std::to_string(st) +
                           " outside the shared block range");
      std::size_t sh = sg_h, sw = sg_w, th = tg_h, tw = tg_w;
      for (std::size_t i = 0; i < st; ++i) {
        sh *= student.strides[i];
        sw *= student.strides[i];
        th *= teacher.strides[i];
        tw *= teacher.strides[i];
      }
      if (sh != th || sw != tw)
        throw config_error("feature stage " + std::to_string(st) +
                           ": student and teacher grids differ");
      const std::size_t cs = student.stage_widths[st - 1];
      const std::size_t ct = teacher.stage_widths[st - 1];
      const double bound = 1.0 / std::sqrt(static_cast<double>(cs));
      TensorT<S> w({ct, cs, 1, 1}), b({ct});
      for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = static_cast<S>(rng.uniform(-bound, bound));
      for (std::size_t i = 0; i < b.size(); ++i)
        b[i] = static_cast<S>(rng.uniform(-bound, bound));
      a.adapters.push_back({ValueT<S>::parameter(std::move(w)),
                            ValueT<S>::parameter(std::move(b))});
    }
    return a;
  }

  void zero_grad() {
    for (auto& ad : adapters) {
      ad.w.zero_grad();
      ad.b.zero_grad();
    }
  }
};

using AdapterParams = AdapterParamsT<float>;

// student_feats / teacher_feats are the full per-block tap lists from
// model_forward; the adapter's stage indices select into them.
template <typename S>
ValueT<S> kd_feature(const std::vector<ValueT<S>>& student_feats,
                     const std::vector<TensorT<S>>& teacher_feats,
                     AdapterParamsT<S>& adapters) {
  if (adapters.adapters.empty()) throw usage_error("feature KD without adapters");
  ValueT<S> total;
  for (std::size_t i = 0; i < adapters.stages.size(); ++i) {
    const std::size_t st = adapters.stages[i];
    if (st > student_feats.size() || st > teacher_feats.size())
      throw usage_error("feature stage beyond captured taps");
    auto mapped = conv2d(student_feats[st - 1], adapters.adapters[i].w,
                         adapters.adapters[i].b);
    auto term = l1_to(mapped, teacher_feats[st - 1]);
    total = total.defined() ? add(total, term) : term;
  }
  return scale(total, 1.0 / static_cast<double>(adapters.stages.size()));
}

// ---------------------------------------------------------------------------
// Combined objective: recon + lambda * KD(mode).

// Component handles for logging; they alias nodes inside the returned graph,
// so reading them after the forward pass costs nothing extra.
template <typename S>
struct LossParts {
  ValueT<S> recon;
  ValueT<S> kd;  // left undefined when no teacher term contributed
};

template <typename S>
struct KDExtras {
  const TensorT<S>* teacher_pred = nullptr;
  // temporal mode
  const ValueT<S>* student_prev = nullptr;
  const TensorT<S>* teacher_prev = nullptr;
  bool temporal_pair_available = true;
  // feature mode
  const std::vector<ValueT<S>>* student_feats = nullptr;
  const std::vector<TensorT<S>>* teacher_feats = nullptr;
  AdapterParamsT<S>* adapters = nullptr;
};

template <typename S>
ValueT<S> total_loss(const ValueT<S>& pred, const TensorT<S>& gt, const KDConfig& cfg,
                     const KDExtras<S>& ex, double beta = 0.7,
                     LossParts<S>* parts = nullptr) {
  cfg.validate();
  auto recon = recon_loss(pred, gt, beta);
  if (parts) parts->recon = recon;
  if (cfg.mode == KDConfig::Mode::none || cfg.lambda_kd == 0.0) return recon;

  ValueT<S> kd;
  switch (cfg.mode) {
    case KDConfig::Mode::final:
      if (!ex.teacher_pred) throw usage_error("final KD needs a teacher prediction");
      kd = kd_final(pred, *ex.teacher_pred);
      break;
    case KDConfig::Mode::freq:
      if (!ex.teacher_pred) throw usage_error("frequency KD needs a teacher prediction");
      kd = kd_freq(pred, *ex.teacher_pred, cfg.alpha, cfg.sigma, cfg.kernel_radius);
      break;
    case KDConfig::Mode::freq_focal:
      if (!ex.teacher_pred) throw usage_error("frequency KD needs a teacher prediction");
      kd = kd_freq_focal(pred, *ex.teacher_pred, cfg.alpha, cfg.gamma, cfg.sigma,
                         cfg.kernel_radius, cfg.weight_floor, cfg.eps);
      break;
    case KDConfig::Mode::temporal:
      if (!ex.temporal_pair_available) return recon;  // no pair this far back
      if (!ex.student_prev || !ex.teacher_pred || !ex.teacher_prev)
        throw usage_error("temporal KD needs current and lagged frames");
      kd = kd_temporal(pred, *ex.student_prev, *ex.teacher_pred, *ex.teacher_prev);
      break;
    case KDConfig::Mode::feature:
      if (!ex.student_feats || !ex.teacher_feats || !ex.adapters)
        throw usage_error("feature KD needs feature taps and adapters");
      kd = kd_feature(*ex.student_feats, *ex.teacher_feats, *ex.adapters);
      break;
    case KDConfig::Mode::none:
      break;
  }
  if (parts) parts->kd = kd;
  return add(recon, scale(kd, cfg.lambda_kd));
}

// Default feature taps: every block after the first.
inline std::vector<std::size_t> resolve_feature_stages(const KDConfig& cfg,
                                                       const VariantConfig& student) {
  if (!cfg.feature_stages.empty()) return cfg.feature_stages;
  std::vector<std::size_t> s;
  for (std::size_t i = 2; i <= student.num_blocks(); ++i) s.push_back(i);
  if (s.empty()) s.push_back(1);
  return s;
}

}  // namespace nervc

#endif  // NERVC_LOSS_HPP
