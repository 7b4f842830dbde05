// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "nervc/loss.hpp"
#include "nervc/model.hpp"
#include "support.hpp"

using nervc::KDConfig;
using nervc::Rng;
using nervc::Tensor;
using nervc::TensorT;
using nervc::ValueT;
using testsup::fd_check;
using testsup::rand_tensor;

namespace {

template <typename S>
TensorT<S> image(Rng& rng, std::size_t c, std::size_t h, std::size_t w) {
  return rand_tensor<S>(rng, {c, h, w}, 0.05, 0.95);
}

double l1_scalar(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  return s / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("reconstruction loss vanishes at the target") {
  Rng rng(51);
  Tensor gt = image<float>(rng, 3, 24, 32);
  auto pred = ValueT<float>::constant(gt);
  CHECK(nervc::recon_loss(pred, gt).item() == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("reconstruction loss splits into its two terms on flat images") {
  Tensor gt = Tensor::full({3, 32, 32}, 0.4f);
  Tensor off = Tensor::full({3, 32, 32}, 0.5f);
  auto pred = ValueT<float>::constant(off);
  // L1 part is exactly 0.1; the structural part follows the constant-image
  // luminance ratio.
  const double c1 = 1e-4;
  const double ssim_const = (2 * 0.4 * 0.5 + c1) / (0.4 * 0.4 + 0.5 * 0.5 + c1);
  const double expected = 0.7 * 0.1 + 0.3 * (1.0 - ssim_const);
  CHECK(nervc::recon_loss(pred, gt, 0.7).item() ==
        doctest::Approx(expected).epsilon(1e-4));
}

TEST_CASE("the pixel term is permutation invariant") {
  Rng rng(52);
  Tensor x = image<float>(rng, 1, 4, 4);
  Tensor y = image<float>(rng, 1, 4, 4);
  std::vector<std::size_t> perm(x.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(perm);
  Tensor xp(x.shape()), yp(y.shape());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    xp[i] = x[perm[i]];
    yp[i] = y[perm[i]];
  }
  const double a = nervc::l1_to(ValueT<float>::constant(x), y).item();
  const double b = nervc::l1_to(ValueT<float>::constant(xp), yp).item();
  CHECK(a == doctest::Approx(b).epsilon(1e-6));
}

TEST_CASE("final-output distillation is mean absolute difference") {
  Rng rng(53);
  Tensor teacher = image<float>(rng, 3, 16, 16);
  CHECK(nervc::kd_final(ValueT<float>::constant(teacher), teacher).item() == 0.0);

  Tensor plus(teacher.shape());
  for (std::size_t i = 0; i < plus.size(); ++i) plus[i] = teacher[i] + 0.03f;
  CHECK(nervc::kd_final(ValueT<float>::constant(plus), teacher).item() ==
        doctest::Approx(0.03).epsilon(1e-5));

  Tensor other = image<float>(rng, 3, 16, 16);
  CHECK(nervc::kd_final(ValueT<float>::constant(other), teacher).item() ==
        doctest::Approx(l1_scalar(other, teacher)).epsilon(1e-5));
}

TEST_CASE("frequency split: constants, reconstruction, impulse response") {
  Rng rng(54);
  Tensor flat = Tensor::full({1, 20, 20}, 0.6f);
  auto [flo, fhi] = nervc::freq_split(flat, 1.0, 3);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    CHECK(flo[i] == doctest::Approx(0.6f).epsilon(1e-6));
    CHECK(std::abs(fhi[i]) < 1e-6f);
  }

  // Low plus high rebuilds the input to one float rounding step.
  Tensor x = image<float>(rng, 3, 24, 32);
  auto [lo, hi] = nervc::freq_split(x, 1.0, 3);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(std::abs(lo[i] + hi[i] - x[i]) <= 1.2e-7f);

  // An interior impulse smears into the separable kernel stamp.
  Tensor imp({1, 15, 15});
  imp.at(0, 7, 7) = 1.0f;
  auto taps = nervc::kernels::gaussian_taps<float>(1.0, 3);
  auto [ilo, ihi] = nervc::freq_split(imp, 1.0, 3);
  for (std::size_t i = 4; i <= 10; ++i)
    for (std::size_t j = 4; j <= 10; ++j)
      CHECK(ilo.at(0, i, j) ==
            doctest::Approx(taps[i - 4] * taps[j - 4]).epsilon(1e-5));
}

TEST_CASE("frequency distillation composes the two band losses") {
  Rng rng(55);
  Tensor teacher = image<float>(rng, 3, 24, 32);
  Tensor student = image<float>(rng, 3, 24, 32);

  CHECK(nervc::kd_freq(ValueT<float>::constant(teacher), teacher, 2.0, 1.0, 3)
            .item() == doctest::Approx(0.0).epsilon(1e-7));

  // At alpha zero only the low band remains.
  auto [slo, shi] = nervc::freq_split(student, 1.0, 3);
  auto [tlo, thi] = nervc::freq_split(teacher, 1.0, 3);
  const double low_only =
      nervc::kd_freq(ValueT<float>::constant(student), teacher, 0.0, 1.0, 3).item();
  CHECK(low_only == doctest::Approx(l1_scalar(slo, tlo)).epsilon(1e-5));

  // A constant offset lives entirely in the low band.
  Tensor shiftd(teacher.shape());
  for (std::size_t i = 0; i < shiftd.size(); ++i) shiftd[i] = teacher[i] + 0.04f;
  CHECK(nervc::kd_freq(ValueT<float>::constant(shiftd), teacher, 2.0, 1.0, 3).item() ==
        doctest::Approx(0.04).epsilon(1e-4));
}

TEST_CASE("focal weights rank pixels by band mismatch") {
  // Two disagreeing pixels with error magnitudes 0.2 and 0.1: weights land
  // on 1 and 0.5 above the floor.
  Tensor s({1, 1, 4});
  Tensor t({1, 1, 4});
  s[0] = 0.2f;
  s[1] = 0.1f;
  auto w = nervc::focal_weights(s, t, 1.0, 0.1, 1e-8);
  REQUIRE(w.rank() == 2);
  CHECK(w[0] == doctest::Approx(1.1).epsilon(1e-5));
  CHECK(w[1] == doctest::Approx(0.6).epsilon(1e-5));
  CHECK(w[2] == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(w[3] == doctest::Approx(0.1).epsilon(1e-6));

  // Identical bands leave only the floor.
  Rng rng(56);
  Tensor same = image<float>(rng, 3, 8, 8);
  auto wf = nervc::focal_weights(same, same, 1.0, 0.1, 1e-8);
  for (std::size_t i = 0; i < wf.size(); ++i)
    CHECK(wf[i] == doctest::Approx(0.1).epsilon(1e-6));

  // The per-pixel error averages across color channels.
  Tensor s3({3, 1, 2});
  Tensor t3({3, 1, 2});
  s3.at(0, 0, 0) = 0.3f;  // only one channel disagrees at pixel 0
  auto w3 = nervc::focal_weights(s3, t3, 1.0, 0.0, 1e-8);
  CHECK(w3[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(w3[1] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("focal frequency distillation reduces to the plain form at unit weights") {
  Rng rng(57);
  Tensor teacher = image<float>(rng, 3, 24, 32);
  Tensor student = image<float>(rng, 3, 24, 32);
  auto sv = ValueT<float>::constant(student);
  // gamma 0 and floor 0 force the weight map to exactly one everywhere.
  const double focal =
      nervc::kd_freq_focal(sv, teacher, 2.0, 0.0, 1.0, 3, 0.0, 1e-8).item();
  const double plain = nervc::kd_freq(sv, teacher, 2.0, 1.0, 3).item();
  CHECK(focal == plain);
}

TEST_CASE("focal frequency distillation matches hand arithmetic on a tiny case") {
  // 2x2 single-channel frames, wide blur radius so each low value is just
  // the window mean under reflection; everything below is scalar math.
  Tensor t = Tensor::from_vector({1, 2, 2}, {0.1f, 0.1f, 0.1f, 0.1f});
  Tensor s = Tensor::from_vector({1, 2, 2}, {0.1f, 0.1f, 0.1f, 0.5f});
  auto sv = ValueT<float>::constant(s);

  auto [slo, shi] = nervc::freq_split(s, 1.0, 3);
  auto [tlo, thi] = nervc::freq_split(t, 1.0, 3);
  Tensor hi_err(s.shape());
  for (std::size_t i = 0; i < 4; ++i) hi_err[i] = shi[i] - thi[i];
  double emax = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    emax = std::max(emax, std::abs(static_cast<double>(hi_err[i])));
  double expected = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double e = std::abs(static_cast<double>(hi_err[i]));
    const double w = std::pow(e / (emax + 1e-8), 1.0) + 0.1;
    expected += w * e;
  }
  expected = l1_scalar(slo, tlo) + 2.0 * expected / 4.0;

  const double got =
      nervc::kd_freq_focal(sv, t, 2.0, 1.0, 1.0, 3, 0.1, 1e-8).item();
  CHECK(got == doctest::Approx(expected).epsilon(1e-4));
}

TEST_CASE("temporal distillation compares frame-to-frame changes") {
  Tensor a = Tensor::full({1, 8, 8}, 0.30f);
  Tensor b = Tensor::full({1, 8, 8}, 0.50f);  // student steps by 0.2
  Tensor c = Tensor::full({1, 8, 8}, 0.40f);
  Tensor d = Tensor::full({1, 8, 8}, 0.45f);  // teacher steps by 0.05
  const double got = nervc::kd_temporal(ValueT<float>::constant(b),
                                        ValueT<float>::constant(a), d, c)
                         .item();
  CHECK(got == doctest::Approx(0.15).epsilon(1e-5));

  // Static sequences agree regardless of their levels.
  CHECK(nervc::kd_temporal(ValueT<float>::constant(a), ValueT<float>::constant(a),
                           c, c)
            .item() == doctest::Approx(0.0));

  // A student that tracks the teacher exactly scores zero too.
  CHECK(nervc::kd_temporal(ValueT<float>::constant(c), ValueT<float>::constant(d),
                           c, d)
            .item() == doctest::Approx(0.0));
}

TEST_CASE("feature distillation bridges widths with 1x1 adapters") {
  // Single stage, single pixel: adapter output a*u + c against teacher v.
  nervc::AdapterParamsT<float> ad;
  ad.stages = {1};
  ad.adapters.push_back(
      {ValueT<float>::parameter(Tensor::from_vector({1, 1, 1, 1}, {2.0f})),
       ValueT<float>::parameter(Tensor::from_vector({1}, {0.25f}))});

  std::vector<ValueT<float>> feats = {
      ValueT<float>::constant(Tensor::from_vector({1, 1, 1}, {0.5f}))};
  std::vector<Tensor> teacher_feats = {Tensor::from_vector({1, 1, 1}, {0.75f})};
  // |2*0.5 + 0.25 - 0.75| = 0.5
  CHECK(nervc::kd_feature(feats, teacher_feats, ad).item() ==
        doctest::Approx(0.5).epsilon(1e-6));

  // Perfect mapping scores zero.
  std::vector<Tensor> matched = {Tensor::from_vector({1, 1, 1}, {1.25f})};
  CHECK(nervc::kd_feature(feats, matched, ad).item() ==
        doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("adapters receive gradients through the feature loss") {
  Rng rng(58);
  nervc::AdapterParamsT<float> ad;
  ad.stages = {1};
  ad.adapters.push_back(
      {ValueT<float>::parameter(rand_tensor<float>(rng, {2, 3, 1, 1})),
       ValueT<float>::parameter(rand_tensor<float>(rng, {2}))});
  std::vector<ValueT<float>> feats = {
      ValueT<float>::constant(rand_tensor<float>(rng, {3, 4, 4}))};
  std::vector<Tensor> teacher_feats = {rand_tensor<float>(rng, {2, 4, 4})};
  ad.zero_grad();
  nervc::backward(nervc::kd_feature(feats, teacher_feats, ad));
  bool any_w = false, any_b = false;
  for (std::size_t i = 0; i < ad.adapters[0].w.grad().size(); ++i)
    any_w = any_w || ad.adapters[0].w.grad()[i] != 0.0f;
  for (std::size_t i = 0; i < ad.adapters[0].b.grad().size(); ++i)
    any_b = any_b || ad.adapters[0].b.grad()[i] != 0.0f;
  CHECK(any_w);
  CHECK(any_b);
}

TEST_CASE("adapter construction rejects out-of-range stages") {
  auto s = nervc::make_variant("T-desk");
  auto t = nervc::make_variant("S-desk");
  CHECK_THROWS_AS(nervc::AdapterParamsT<float>::init(s, t, {7}, 1),
                  nervc::config_error);
  CHECK_THROWS_AS(nervc::AdapterParamsT<float>::init(s, t, {}, 1),
                  nervc::config_error);
}

TEST_CASE("combined objective honors mode none and zero weight") {
  Rng rng(59);
  Tensor gt = image<float>(rng, 3, 16, 16);
  Tensor pred = image<float>(rng, 3, 16, 16);
  auto pv = ValueT<float>::constant(pred);

  KDConfig cfg;  // mode none
  nervc::KDExtras<float> ex;
  const double plain = nervc::total_loss(pv, gt, cfg, ex).item();
  CHECK(plain == nervc::recon_loss(pv, gt).item());

  cfg.mode = KDConfig::Mode::final;
  cfg.lambda_kd = 0.0;  // no teacher attached; must not be consulted
  CHECK(nervc::total_loss(pv, gt, cfg, ex).item() == plain);

  cfg.lambda_kd = 1.0;
  CHECK_THROWS_AS(nervc::total_loss(pv, gt, cfg, ex), nervc::usage_error);
}

TEST_CASE("combined objective adds the weighted teacher term") {
  Rng rng(60);
  Tensor gt = image<float>(rng, 3, 16, 16);
  Tensor pred = image<float>(rng, 3, 16, 16);
  Tensor teacher = image<float>(rng, 3, 16, 16);
  auto pv = ValueT<float>::constant(pred);

  KDConfig cfg;
  cfg.mode = KDConfig::Mode::final;
  cfg.lambda_kd = 0.7;
  nervc::KDExtras<float> ex;
  ex.teacher_pred = &teacher;
  nervc::LossParts<float> parts;
  const double total = nervc::total_loss(pv, gt, cfg, ex, 0.7, &parts).item();
  CHECK(total == doctest::Approx(parts.recon.item() + 0.7 * parts.kd.item())
                     .epsilon(1e-6));
  CHECK(parts.kd.item() == doctest::Approx(l1_scalar(pred, teacher)).epsilon(1e-5));
}

TEST_CASE("loss gradients match central differences") {
  Rng rng(61);
  TensorT<double> gt64 = image<double>(rng, 2, 12, 14);
  TensorT<double> teacher64 = image<double>(rng, 2, 12, 14);

  auto p = ValueT<double>::parameter(image<double>(rng, 2, 12, 14));

  auto recon = [&] { return nervc::recon_loss(p, gt64); };
  CHECK(fd_check({&p}, recon, 8, 201).max_rel < 1e-4);

  auto fin = [&] { return nervc::kd_final(p, teacher64); };
  CHECK(fd_check({&p}, fin, 8, 202).max_rel < 1e-4);

  auto freq = [&] { return nervc::kd_freq(p, teacher64, 2.0, 1.0, 3); };
  CHECK(fd_check({&p}, freq, 8, 203).max_rel < 1e-4);

  auto prev = ValueT<double>::parameter(image<double>(rng, 2, 12, 14));
  TensorT<double> tprev = image<double>(rng, 2, 12, 14);
  auto temporal = [&] { return nervc::kd_temporal(p, prev, teacher64, tprev); };
  CHECK(fd_check({&p, &prev}, temporal, 8, 204).max_rel < 1e-4);

  // Feature loss: gradients reach the adapters and the student features.
  nervc::AdapterParamsT<double> ad;
  ad.stages = {1};
  ad.adapters.push_back(
      {ValueT<double>::parameter(rand_tensor<double>(rng, {2, 3, 1, 1})),
       ValueT<double>::parameter(rand_tensor<double>(rng, {2}))});
  auto feat = ValueT<double>::parameter(rand_tensor<double>(rng, {3, 5, 5}));
  std::vector<nervc::TensorT<double>> tfeats = {rand_tensor<double>(rng, {2, 5, 5})};
  auto feature_loss = [&] {
    std::vector<ValueT<double>> feats = {feat};
    return nervc::kd_feature(feats, tfeats, ad);
  };
  CHECK(fd_check({&feat, &ad.adapters[0].w, &ad.adapters[0].b}, feature_loss, 8,
                 206)
            .max_rel < 1e-4);
}

TEST_CASE("focal loss gradient treats the weight map as data") {
  Rng rng(62);
  TensorT<double> teacher = image<double>(rng, 2, 12, 14);
  auto p = ValueT<double>::parameter(image<double>(rng, 2, 12, 14));

  // Analytic gradient of the focal loss as implemented.
  p.zero_grad();
  nervc::backward(nervc::kd_freq_focal(p, teacher, 2.0, 1.5, 1.0, 3, 0.1, 1e-8));
  const TensorT<double> analytic = p.grad();

  // Probe the objective with the weight map frozen at its base-point value:
  // that is the function the detached construction actually differentiates.
  const auto base = nervc::freq_split(p.value(), 1.0, 3);
  const auto teach = nervc::freq_split(teacher, 1.0, 3);
  const TensorT<double>& t_lo = teach.first;
  const TensorT<double>& t_hi = teach.second;
  const TensorT<double> w_fixed =
      nervc::focal_weights(base.second, t_hi, 1.5, 0.1, 1e-8);

  auto frozen = [&] {
    auto [lo, hi] = nervc::freq_split(p, 1.0, 3);
    auto low_term = nervc::l1_to(lo, t_lo);
    auto weighted = nervc::weight_map_mul(
        nervc::sub(hi, ValueT<double>::constant(t_hi)), w_fixed);
    auto high_term = nervc::mean(nervc::abs(weighted));
    return nervc::add(low_term, nervc::scale(high_term, 2.0));
  };

  nervc::Rng probe_rng(205);
  double max_rel = 0.0;
  const double h = 1e-5;
  for (int n = 0; n < 24; ++n) {
    const std::size_t i =
        static_cast<std::size_t>(probe_rng.bounded(p.value().size()));
    const double v = p.value()[i];
    p.value()[i] = v + h;
    const double lp = frozen().item();
    p.value()[i] = v - h;
    const double lm = frozen().item();
    p.value()[i] = v;
    const double fd = (lp - lm) / (2 * h);
    max_rel = std::max(max_rel,
                       std::abs(analytic[i] - fd) / (std::abs(fd) + 1e-8));
  }
  CHECK(max_rel < 1e-4);
}
