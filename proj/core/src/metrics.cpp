// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nervc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "nervc/errors.hpp"
#include "nervc/nn_kernels.hpp"

namespace nervc {

namespace {

constexpr double kPsnrCap = 100.0;
constexpr std::size_t kWindow = 11;
constexpr std::size_t kRadius = 5;
constexpr double kWindowSigma = 1.5;

Tensor64 widen(const Tensor& x) {
  Tensor64 y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<double>(x[i]);
  return y;
}

void check_pair(const Tensor64& x, const Tensor64& y, const char* what) {
  if (!x.same_shape(y))
    throw input_error(std::string(what) + ": shape mismatch " + x.shape_str() +
                      " vs " + y.shape_str());
  if (x.rank() < 2) throw input_error(std::string(what) + ": need [..,H,W] frames");
}

double mse_of(const Tensor64& x, const Tensor64& y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc / static_cast<double>(x.size());
}

double psnr_from_mse(double mse, double peak) {
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

// Window means of the SSIM map and of its luminance / contrast-structure
// factors, over all windows and channels of one image pair.
struct SsimMeans {
  double full = 0.0;  // mean of l*cs (plain SSIM)
  double l = 0.0;
  double cs = 0.0;
};

SsimMeans ssim_means(const Tensor64& x, const Tensor64& y, double peak) {
  if (std::min(x.extent(x.rank() - 1), x.extent(x.rank() - 2)) < kWindow)
    throw input_error("image too small for an 11x11 SSIM window");
  const double c1 = 0.01 * peak * 0.01 * peak;
  const double c2 = 0.03 * peak * 0.03 * peak;
  const auto taps = kernels::gaussian_taps<double>(kWindowSigma, kRadius);

  Tensor64 mu_x, mu_y, xx(x.shape()), yy(x.shape()), xy(x.shape());
  kernels::blur_forward(x, taps, mu_x);
  kernels::blur_forward(y, taps, mu_y);
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  Tensor64 mxx, myy, mxy;
  kernels::blur_forward(xx, taps, mxx);
  kernels::blur_forward(yy, taps, myy);
  kernels::blur_forward(xy, taps, mxy);

  SsimMeans out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double sxx = mxx[i] - mu_x[i] * mu_x[i];
    const double syy = myy[i] - mu_y[i] * mu_y[i];
    const double sxy = mxy[i] - mu_x[i] * mu_y[i];
    const double l = (2.0 * mu_x[i] * mu_y[i] + c1) /
                     (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + c1);
    const double cs = (2.0 * sxy + c2) / (sxx + syy + c2);
    out.full += l * cs;
    out.l += l;
    out.cs += cs;
  }
  const double n = static_cast<double>(x.size());
  out.full /= n;
  out.l /= n;
  out.cs /= n;
  return out;
}

Tensor64 downsample2(const Tensor64& x) {
  const std::size_t w = x.extent(x.rank() - 1);
  const std::size_t h = x.extent(x.rank() - 2);
  const std::size_t planes = x.size() / (h * w);
  const std::size_t oh = h / 2, ow = w / 2;
  std::vector<std::size_t> shape = x.shape();
  shape[shape.size() - 2] = oh;
  shape[shape.size() - 1] = ow;
  Tensor64 y(shape);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = x.data() + p * h * w;
    double* dst = y.data() + p * oh * ow;
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j)
        dst[i * ow + j] = 0.25 * (src[2 * i * w + 2 * j] + src[2 * i * w + 2 * j + 1] +
                                  src[(2 * i + 1) * w + 2 * j] +
                                  src[(2 * i + 1) * w + 2 * j + 1]);
  }
  return y;
}

double ms_ssim_impl(Tensor64 x, Tensor64 y, double peak) {
  static const double kWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

  const std::size_t short_side =
      std::min(x.extent(x.rank() - 2), x.extent(x.rank() - 1));
  std::size_t scales = 0;
  for (std::size_t m = 0; m < 5; ++m)
    if (short_side / (std::size_t{1} << m) >= kWindow) scales = m + 1;
  if (scales == 0) throw input_error("image too small for an 11x11 SSIM window");

  double wsum = 0.0;
  for (std::size_t m = 0; m < scales; ++m) wsum += kWeights[m];
  const bool renorm = scales < 5;

  double result = 1.0;
  for (std::size_t m = 0; m < scales; ++m) {
    const SsimMeans mo = ssim_means(x, y, peak);
    const double wgt = renorm ? kWeights[m] / wsum : kWeights[m];
    const double cs = std::max(mo.cs, 0.0);
    if (m + 1 == scales) {
      result *= std::pow(std::max(mo.l, 0.0), wgt) * std::pow(cs, wgt);
    } else {
      result *= std::pow(cs, wgt);
      x = downsample2(x);
      y = downsample2(y);
    }
  }
  return result;
}

}  // namespace

double psnr(const Tensor& x, const Tensor& y, double peak) {
  Tensor64 xd = widen(x), yd = widen(y);
  check_pair(xd, yd, "psnr");
  return psnr_from_mse(mse_of(xd, yd), peak);
}

double ssim(const Tensor& x, const Tensor& y, double peak) {
  Tensor64 xd = widen(x), yd = widen(y);
  check_pair(xd, yd, "ssim");
  return ssim_means(xd, yd, peak).full;
}

double ms_ssim(const Tensor& x, const Tensor& y, double peak) {
  Tensor64 xd = widen(x), yd = widen(y);
  check_pair(xd, yd, "ms_ssim");
  return ms_ssim_impl(std::move(xd), std::move(yd), peak);
}

std::pair<double, double> temporal_metrics(const std::vector<Tensor>& recon,
                                           const std::vector<Tensor>& gt) {
  if (recon.size() != gt.size())
    throw input_error("temporal metrics: sequence lengths differ");
  if (recon.size() < 2) throw input_error("temporal metrics need at least 2 frames");

  double se = 0.0;
  std::size_t n = 0;
  double ssim_acc = 0.0;
  for (std::size_t t = 1; t < recon.size(); ++t) {
    Tensor64 dr = widen(recon[t]), dg = widen(gt[t]);
    const Tensor64 rp = widen(recon[t - 1]), gp = widen(gt[t - 1]);
    check_pair(dr, dg, "temporal_metrics");
    check_pair(dr, rp, "temporal_metrics");
    for (std::size_t i = 0; i < dr.size(); ++i) {
      dr[i] -= rp[i];
      dg[i] -= gp[i];
      const double d = dr[i] - dg[i];
      se += d * d;
    }
    n += dr.size();

    // Differences live in [-1,1]; remap to [0,1] for SSIM.
    Tensor64 rr(dr.shape()), gg(dg.shape());
    for (std::size_t i = 0; i < dr.size(); ++i) {
      rr[i] = 0.5 * (dr[i] + 1.0);
      gg[i] = 0.5 * (dg[i] + 1.0);
    }
    ssim_acc += ssim_means(rr, gg, 1.0).full;
  }
  const double t_psnr = psnr_from_mse(se / static_cast<double>(n), 1.0);
  return {t_psnr, ssim_acc / static_cast<double>(recon.size() - 1)};
}

double efficiency(double mean_psnr, double gflops) {
  if (!(gflops > 0.0)) throw input_error("efficiency needs positive GFLOPs");
  return mean_psnr / gflops;
}

void MetricReport::write_csv(std::ostream& os) const {
  os << "row,frame,psnr_db,ms_ssim,t_psnr_db,t_ssim,gflops,psnr_per_gflop\n";
  os << std::setprecision(10);
  for (std::size_t i = 0; i < frame_psnr.size(); ++i)
    os << "frame," << i << "," << frame_psnr[i] << "," << frame_ms_ssim[i]
       << ",,,,\n";
  os << "summary,," << mean_psnr << "," << mean_ms_ssim << "," << t_psnr << ","
     << t_ssim << "," << gflops << "," << psnr_per_gflop << "\n";
}

std::string MetricReport::table() const {
  std::ostringstream os;
  os << label << ": " << frame_count << " frames\n"
     << std::fixed
     << "  mean PSNR      " << std::setprecision(3) << mean_psnr << " dB\n"
     << "  mean MS-SSIM   " << std::setprecision(5) << mean_ms_ssim << "\n"
     << "  T-PSNR         " << std::setprecision(3) << t_psnr << " dB\n"
     << "  tSSIM          " << std::setprecision(5) << t_ssim << "\n"
     << "  decode GFLOPs  " << std::setprecision(4) << gflops << "\n"
     << "  PSNR/GFLOP     " << std::setprecision(4) << psnr_per_gflop << "\n";
  return os.str();
}

}  // namespace nervc
