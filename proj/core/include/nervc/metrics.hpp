// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NERVC_METRICS_HPP
#define NERVC_METRICS_HPP

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "nervc/tensor.hpp"

namespace nervc {

// Reconstruction quality measures. All of them are pure functions computed
// in double precision regardless of the frame storage type.
//
// PSNR is capped at 100 dB; a perfect reconstruction (zero MSE) reports
// exactly the cap, and the cap value is documented in the CSV schema.

double psnr(const Tensor& x, const Tensor& y, double peak = 1.0);

// Single-scale SSIM, 11x11 Gaussian window sigma 1.5, C1=(0.01 peak)^2,
// C2=(0.03 peak)^2, symmetric edge reflection; channels averaged.
double ssim(const Tensor& x, const Tensor& y, double peak = 1.0);

// Multi-scale SSIM with the standard five weights (0.0448, 0.2856, 0.3001,
// 0.2363, 0.1333) and dyadic 2x2-mean downsampling. Images smaller than 176
// px use fewer scales with the weight vector renormalized; an image too
// small for even one 11x11 window is an input error.
double ms_ssim(const Tensor& x, const Tensor& y, double peak = 1.0);

// Temporal stability on difference images D_t = I_t - I_{t-1}:
//   first  = PSNR between the stacked difference sequences, peak 1.0
//   second = mean SSIM over difference pairs remapped by (d+1)/2
std::pair<double, double> temporal_metrics(const std::vector<Tensor>& recon,
                                           const std::vector<Tensor>& gt);

// PSNR per GFLOP of decode cost.
double efficiency(double mean_psnr, double gflops);

struct MetricReport {
  std::string label;
  std::size_t frame_count = 0;
  std::vector<double> frame_psnr;
  std::vector<double> frame_ms_ssim;
  double mean_psnr = 0.0;
  double mean_ms_ssim = 0.0;
  double t_psnr = 0.0;
  double t_ssim = 0.0;
  double gflops = 0.0;
  double psnr_per_gflop = 0.0;

  // One row per frame plus a summary row; the 100 dB PSNR cap marks
  // perfect frames.
  void write_csv(std::ostream& os) const;
  std::string table() const;
};

}  // namespace nervc

#endif  // NERVC_METRICS_HPP
