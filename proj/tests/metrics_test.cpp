// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "nervc/metrics.hpp"
#include "nervc/rng.hpp"
#include "support.hpp"

using nervc::Rng;
using nervc::Tensor;
using testsup::rand_tensor;

namespace {

// A smooth low-frequency test image with nontrivial local statistics.
Tensor textured(std::size_t h, std::size_t w, double phase = 0.0) {
  Tensor t({3, h, w});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j)
        t.at(c, i, j) = static_cast<float>(
            0.5 + 0.35 * std::sin(0.21 * i + 0.13 * j + phase + 0.8 * c) *
                      std::cos(0.07 * i - 0.18 * j));
  return t;
}

Tensor shifted(const Tensor& x, float c) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + c;
  return y;
}

}  // namespace

TEST_CASE("psnr closed forms") {
  Tensor x = textured(24, 32);
  CHECK(nervc::psnr(x, x) == 100.0);

  Tensor y01 = shifted(x, 0.1f);
  CHECK(nervc::psnr(x, y01) == doctest::Approx(20.0).epsilon(1e-5));

  Tensor y05 = shifted(x, 0.5f);
  CHECK(nervc::psnr(x, y05) == doctest::Approx(6.0206).epsilon(1e-4));

  CHECK(nervc::psnr(x, y01) == nervc::psnr(y01, x));
  CHECK(nervc::psnr(x, y01) > nervc::psnr(x, y05));

  Tensor wrong({3, 24, 31});
  CHECK_THROWS_AS(nervc::psnr(x, wrong), nervc::input_error);
}

TEST_CASE("ssim of constant images matches the closed form") {
  const double a = 0.4, b = 0.5;
  Tensor x = Tensor::full({1, 32, 32}, static_cast<float>(a));
  Tensor y = Tensor::full({1, 32, 32}, static_cast<float>(b));
  const double c1 = 1e-4;
  // Variances vanish, so the structure term is c2/c2 == 1 and only the
  // luminance ratio remains.
  const double expected = (2 * a * b + c1) / (a * a + b * b + c1);
  CHECK(nervc::ssim(x, y) == doctest::Approx(expected).epsilon(1e-5));
  CHECK(nervc::ssim(x, x) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("ms_ssim is one at identity and drops with corruption") {
  Tensor x = textured(180, 320);
  CHECK(nervc::ms_ssim(x, x) == doctest::Approx(1.0).epsilon(1e-6));

  Tensor inverted(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) inverted[i] = 1.0f - x[i];
  Rng rng(41);
  Tensor noisy(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i)
    noisy[i] = x[i] + static_cast<float>(rng.uniform(-0.02, 0.02));
  CHECK(nervc::ms_ssim(x, inverted) < nervc::ms_ssim(x, noisy));
}

TEST_CASE("ms_ssim tolerates a shared brightness offset") {
  Tensor x = textured(96, 128);
  Rng rng(42);
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] = x[i] + static_cast<float>(rng.uniform(-0.01, 0.01));
  const double base = nervc::ms_ssim(x, y);
  const double moved = nervc::ms_ssim(shifted(x, 0.08f), shifted(y, 0.08f));
  CHECK(std::abs(base - moved) < 1e-3);
}

TEST_CASE("ms_ssim rejects images below one window") {
  Tensor a = Tensor::full({3, 8, 8}, 0.5f);
  CHECK_THROWS_AS(nervc::ms_ssim(a, a), nervc::input_error);
}

TEST_CASE("temporal metrics cap on perfect reconstruction") {
  std::vector<Tensor> gt;
  for (int k = 0; k < 3; ++k) gt.push_back(textured(24, 32, 0.3 * k));
  auto [tp, ts] = nervc::temporal_metrics(gt, gt);
  CHECK(tp == 100.0);
  CHECK(ts == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("temporal metrics ignore static offsets") {
  std::vector<Tensor> gt, recon;
  for (int k = 0; k < 3; ++k) {
    gt.push_back(textured(24, 32, 0.3 * k));
    recon.push_back(shifted(gt.back(), 0.05f));  // same constant every frame
  }
  auto [tp, ts] = nervc::temporal_metrics(recon, gt);
  CHECK(tp == 100.0);  // the offset cancels inside each difference
  CHECK(ts == doctest::Approx(1.0).epsilon(1e-6));

  // Shifting both sequences by one shared constant changes nothing either.
  std::vector<Tensor> gt2, recon2;
  for (int k = 0; k < 3; ++k) {
    recon2.push_back(textured(24, 32, 0.3 * k + 0.02));
    gt2.push_back(textured(24, 32, 0.3 * k));
  }
  auto [a_tp, a_ts] = nervc::temporal_metrics(recon2, gt2);
  std::vector<Tensor> gt3, recon3;
  for (int k = 0; k < 3; ++k) {
    recon3.push_back(shifted(recon2[static_cast<std::size_t>(k)], 0.07f));
    gt3.push_back(shifted(gt2[static_cast<std::size_t>(k)], 0.07f));
  }
  auto [b_tp, b_ts] = nervc::temporal_metrics(recon3, gt3);
  CHECK(a_tp == doctest::Approx(b_tp).epsilon(1e-6));
  CHECK(a_ts == doctest::Approx(b_ts).epsilon(1e-5));
}

TEST_CASE("temporal metrics match hand arithmetic on constant diffs") {
  // Ground-truth frames step by 0.05, reconstruction by 0.2: every
  // difference pixel disagrees by exactly 0.15.
  std::vector<Tensor> gt = {Tensor::full({1, 16, 16}, 0.30f),
                            Tensor::full({1, 16, 16}, 0.35f)};
  std::vector<Tensor> recon = {Tensor::full({1, 16, 16}, 0.30f),
                               Tensor::full({1, 16, 16}, 0.50f)};
  auto [tp, ts] = nervc::temporal_metrics(recon, gt);
  CHECK(tp == doctest::Approx(10.0 * std::log10(1.0 / (0.15 * 0.15))).epsilon(1e-4));

  // Remapped difference images are the constants 0.6 and 0.525; SSIM of two
  // constants follows the luminance closed form.
  const double a = 0.6, b = 0.525, c1 = 1e-4;
  const double expected = (2 * a * b + c1) / (a * a + b * b + c1);
  CHECK(ts == doctest::Approx(expected).epsilon(1e-4));
}

TEST_CASE("temporal metrics need at least two frames") {
  std::vector<Tensor> one = {textured(16, 16)};
  CHECK_THROWS_AS(nervc::temporal_metrics(one, one), nervc::input_error);
  std::vector<Tensor> two = {textured(16, 16), textured(16, 16, 0.5)};
  CHECK_THROWS_AS(nervc::temporal_metrics(two, one), nervc::input_error);
}

TEST_CASE("efficiency reproduces the published quality-per-cost figures") {
  const struct {
    double psnr, gflops, expected;
  } rows[] = {
      {27.84, 22.62, 1.231}, {29.35, 89.80, 0.327}, {32.11, 201.9, 0.159},
      {36.02, 202.9, 0.178}, {39.70, 204.2, 0.194},
  };
  for (const auto& r : rows)
    CHECK(std::round(nervc::efficiency(r.psnr, r.gflops) * 1e3) / 1e3 ==
          doctest::Approx(r.expected));
  CHECK(nervc::efficiency(0.0, 22.62) == 0.0);
  CHECK_THROWS_AS(nervc::efficiency(30.0, 0.0), nervc::input_error);
}

TEST_CASE("metric report CSV carries the documented schema") {
  nervc::MetricReport rep;
  rep.label = "demo";
  rep.frame_count = 2;
  rep.frame_psnr = {31.5, 100.0};
  rep.frame_ms_ssim = {0.97, 1.0};
  rep.mean_psnr = 65.75;
  rep.mean_ms_ssim = 0.985;
  rep.t_psnr = 40.0;
  rep.t_ssim = 0.99;
  rep.gflops = 1.222;
  rep.psnr_per_gflop = 53.8;
  std::ostringstream os;
  rep.write_csv(os);
  const std::string text = os.str();
  CHECK(text.rfind("row,frame,psnr_db,ms_ssim,t_psnr_db,t_ssim,gflops,psnr_per_gflop",
                   0) == 0);
  CHECK(text.find("summary") != std::string::npos);
  CHECK(text.find("100") != std::string::npos);  // the cap sentinel
}
