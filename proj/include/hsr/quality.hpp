// Loss terms with analytic gradients w.r.t. the SR image, and the
// evaluation metric suite (PSNR, SSIM, SAM, CC, RMSE, ERGAS).
//
// Cubes are H x W x B tensors, band axis fastest. Losses treat the cube
// as one batch element.
#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "hsr/tensor.hpp"

namespace hsr {

struct LossWeights {
  double lambda_sam = 0.3;
  double lambda_grad = 0.1;
};

struct LossResult {
  double value = 0.0;
  std::vector<double> grad;  // d value / d sr, same layout as sr
};

namespace detail {
inline void check_pair(const Tensor& sr, const Tensor& hr) {
  require(sr.rank() == 3 && hr.rank() == 3, "loss: cubes must be 3-D");
  require(sr.shape == hr.shape, "loss: shape mismatch");
}
}  // namespace detail

// Mean absolute difference; gradient sign(sr - hr)/count with sign(0)=0.
inline LossResult l1_loss(const Tensor& sr, const Tensor& hr) {
  detail::check_pair(sr, hr);
  const std::size_t n = sr.size();
  LossResult r;
  r.grad.assign(n, 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = sr.data[i] - hr.data[i];
    sum += std::fabs(d);
    r.grad[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / double(n);
  }
  r.value = sum / double(n);
  return r;
}

// Mean over pixels of arccos(<sr,hr>/(|sr||hr|)) / pi. Norms are clamped
// below by 1e-12; the arccos argument is clamped to [-1,1].
inline LossResult sam_loss(const Tensor& sr, const Tensor& hr) {
  detail::check_pair(sr, hr);
  const std::size_t HW = sr.dim(0) * sr.dim(1), B = sr.dim(2);
  constexpr double eps = 1e-12;
  LossResult r;
  r.grad.assign(sr.size(), 0.0);
  double sum = 0.0;
  for (std::size_t p = 0; p < HW; ++p) {
    const double* s = &sr.data[p * B];
    const double* h = &hr.data[p * B];
    double dot = 0.0, ns2 = 0.0, nh2 = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      dot += s[b] * h[b];
      ns2 += s[b] * s[b];
      nh2 += h[b] * h[b];
    }
    const double ns = std::max(std::sqrt(ns2), eps);
    const double nh = std::max(std::sqrt(nh2), eps);
    double u = dot / std::max(std::sqrt(ns2 * nh2), eps * eps);
    u = std::clamp(u, -1.0, 1.0);
    sum += std::acos(u);
    const double root = std::sqrt(std::max(1.0 - u * u, eps));
    const double scale = -1.0 / (root * M_PI * double(HW));
    for (std::size_t b = 0; b < B; ++b)
      r.grad[p * B + b] +=
          scale * (h[b] / (ns * nh) - u * s[b] / (ns * ns));
  }
  r.value = sum / (M_PI * double(HW));
  return r;
}

// L1 distance between first-order forward differences along the
// vertical, horizontal and spectral axes; per-axis mean, summed over
// the three axes.
inline LossResult gradient_loss(const Tensor& sr, const Tensor& hr) {
  detail::check_pair(sr, hr);
  const std::size_t H = sr.dim(0), W = sr.dim(1), B = sr.dim(2);
  require(H >= 2 && W >= 2 && B >= 2,
          "gradient_loss: extents must be >= 2 along each axis");
  LossResult r;
  r.grad.assign(sr.size(), 0.0);

  auto axis_term = [&](std::size_t stride_axis, std::size_t eh,
                       std::size_t ew, std::size_t eb) {
    const std::size_t count = eh * ew * eb;
    double sum = 0.0;
    for (std::size_t y = 0; y < eh; ++y)
      for (std::size_t x = 0; x < ew; ++x)
        for (std::size_t b = 0; b < eb; ++b) {
          const std::size_t i0 = (y * W + x) * B + b;
          const std::size_t i1 = i0 + stride_axis;
          const double d = (sr.data[i1] - sr.data[i0]) -
                           (hr.data[i1] - hr.data[i0]);
          sum += std::fabs(d);
          const double g =
              (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / double(count);
          r.grad[i1] += g;
          r.grad[i0] -= g;
        }
    return sum / double(count);
  };

  r.value = axis_term(W * B, H - 1, W, B)  // vertical
            + axis_term(B, H, W - 1, B)    // horizontal
            + axis_term(1, H, W, B - 1);   // spectral
  return r;
}

// L1 + lambda_s * SAM + lambda_g * gradient.
inline LossResult total_loss(const Tensor& sr, const Tensor& hr,
                             const LossWeights& w = {}) {
  require(w.lambda_sam >= 0.0 && w.lambda_grad >= 0.0,
          "total_loss: weights must be non-negative");
  const LossResult a = l1_loss(sr, hr);
  const LossResult b = sam_loss(sr, hr);
  const LossResult c = gradient_loss(sr, hr);
  LossResult r;
  r.value = a.value + w.lambda_sam * b.value + w.lambda_grad * c.value;
  r.grad.resize(a.grad.size());
  for (std::size_t i = 0; i < r.grad.size(); ++i)
    r.grad[i] = a.grad[i] + w.lambda_sam * b.grad[i] +
                w.lambda_grad * c.grad[i];
  return r;
}

// ---------------------------------------------------------------------
// Metrics

inline double mse(const Tensor& sr, const Tensor& hr) {
  detail::check_pair(sr, hr);
  double s = 0.0;
  for (std::size_t i = 0; i < sr.size(); ++i) {
    const double d = sr.data[i] - hr.data[i];
    s += d * d;
  }
  return s / double(sr.size());
}

inline double rmse(const Tensor& sr, const Tensor& hr) {
  return std::sqrt(mse(sr, hr));
}

// Capped at 100 dB for identical inputs.
inline double psnr(const Tensor& sr, const Tensor& hr, double peak = 1.0) {
  const double m = mse(sr, hr);
  if (m <= 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(peak * peak / m));
}

namespace detail {

// 11x11 Gaussian window, sigma 1.5, normalized to sum 1.
inline const std::vector<double>& ssim_window() {
  static const std::vector<double> w = [] {
    std::vector<double> v(11 * 11);
    double sum = 0.0;
    for (int y = 0; y < 11; ++y)
      for (int x = 0; x < 11; ++x) {
        const double dy = y - 5, dx = x - 5;
        v[y * 11 + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
        sum += v[y * 11 + x];
      }
    for (double& t : v) t /= sum;
    return v;
  }();
  return w;
}

inline double ssim_band(const Tensor& sr, const Tensor& hr, std::size_t band,
                        double peak) {
  const std::size_t H = sr.dim(0), W = sr.dim(1), B = sr.dim(2);
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);

  auto ssim_at = [&](double mx, double my, double sxx, double syy,
                     double sxy) {
    return ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) /
           ((mx * mx + my * my + c1) * (sxx + syy + c2));
  };

  if (H < 11 || W < 11) {
    // one global uniform window over the whole band
    double mx = 0.0, my = 0.0;
    const double inv = 1.0 / double(H * W);
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        mx += sr.at3(y, x, band);
        my += hr.at3(y, x, band);
      }
    mx *= inv;
    my *= inv;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        const double a = sr.at3(y, x, band) - mx;
        const double b = hr.at3(y, x, band) - my;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
      }
    return ssim_at(mx, my, sxx * inv, syy * inv, sxy * inv);
  }

  const std::vector<double>& win = ssim_window();
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t cy = 5; cy + 5 < H; ++cy)
    for (std::size_t cx = 5; cx + 5 < W; ++cx) {
      double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (int wy = 0; wy < 11; ++wy)
        for (int wx = 0; wx < 11; ++wx) {
          const double g = win[wy * 11 + wx];
          const double a = sr.at3(cy + wy - 5, cx + wx - 5, band);
          const double b = hr.at3(cy + wy - 5, cx + wx - 5, band);
          mx += g * a;
          my += g * b;
          sxx += g * a * a;
          syy += g * b * b;
          sxy += g * a * b;
        }
      sxx -= mx * mx;
      syy -= my * my;
      sxy -= mx * my;
      acc += ssim_at(mx, my, sxx, syy, sxy);
      ++count;
    }
  (void)B;
  return acc / double(count);
}

}  // namespace detail

// Windowed SSIM per band, averaged over bands.
inline double ssim(const Tensor& sr, const Tensor& hr, double peak = 1.0) {
  detail::check_pair(sr, hr);
  const std::size_t B = sr.dim(2);
  double acc = 0.0;
  for (std::size_t b = 0; b < B; ++b)
    acc += detail::ssim_band(sr, hr, b, peak);
  return acc / double(B);
}

// Mean per-pixel spectral angle in degrees.
inline double sam_metric(const Tensor& sr, const Tensor& hr) {
  detail::check_pair(sr, hr);
  const std::size_t HW = sr.dim(0) * sr.dim(1), B = sr.dim(2);
  constexpr double eps = 1e-12;
  double sum = 0.0;
  for (std::size_t p = 0; p < HW; ++p) {
    double dot = 0.0, ns2 = 0.0, nh2 = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      const double s = sr.data[p * B + b], h = hr.data[p * B + b];
      dot += s * h;
      ns2 += s * s;
      nh2 += h * h;
    }
    // sqrt of the product keeps identical inputs at exactly angle 0
    const double den = std::max(std::sqrt(ns2 * nh2), eps * eps);
    sum += std::acos(std::clamp(dot / den, -1.0, 1.0));
  }
  return sum / double(HW) * 180.0 / M_PI;
}

// Mean over bands of the Pearson correlation between band images.
// Zero-variance bands are skipped and excluded from the mean.
inline double cc(const Tensor& sr, const Tensor& hr,
                 std::size_t* skipped = nullptr) {
  detail::check_pair(sr, hr);
  const std::size_t HW = sr.dim(0) * sr.dim(1), B = sr.dim(2);
  double acc = 0.0;
  std::size_t used = 0, skip = 0;
  for (std::size_t b = 0; b < B; ++b) {
    double ms = 0.0, mh = 0.0;
    for (std::size_t p = 0; p < HW; ++p) {
      ms += sr.data[p * B + b];
      mh += hr.data[p * B + b];
    }
    ms /= double(HW);
    mh /= double(HW);
    double vs = 0.0, vh = 0.0, cov = 0.0;
    for (std::size_t p = 0; p < HW; ++p) {
      const double a = sr.data[p * B + b] - ms;
      const double c2 = hr.data[p * B + b] - mh;
      vs += a * a;
      vh += c2 * c2;
      cov += a * c2;
    }
    if (vs <= 0.0 || vh <= 0.0) {
      ++skip;
      continue;
    }
    acc += cov / std::sqrt(vs * vh);
    ++used;
  }
  if (skipped) *skipped = skip;
  return used > 0 ? acc / double(used) : 1.0;
}

// 100/s * sqrt(mean over bands of (rmse_b / mean(hr_b))^2). Zero-mean
// reference bands are floored at 1e-12.
inline double ergas(const Tensor& sr, const Tensor& hr, double scale,
                    std::size_t* floored = nullptr) {
  detail::check_pair(sr, hr);
  require(scale > 0.0, "ergas: scale must be positive");
  const std::size_t HW = sr.dim(0) * sr.dim(1), B = sr.dim(2);
  double acc = 0.0;
  std::size_t floor_count = 0;
  for (std::size_t b = 0; b < B; ++b) {
    double mh = 0.0, se = 0.0;
    for (std::size_t p = 0; p < HW; ++p) {
      mh += hr.data[p * B + b];
      const double d = sr.data[p * B + b] - hr.data[p * B + b];
      se += d * d;
    }
    mh /= double(HW);
    if (std::fabs(mh) < 1e-12) {
      mh = 1e-12;
      ++floor_count;
    }
    acc += (se / double(HW)) / (mh * mh);
  }
  if (floored) *floored = floor_count;
  return 100.0 / scale * std::sqrt(acc / double(B));
}

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  double sam = 0.0;  // degrees
  double cc = 0.0;
  double rmse = 0.0;
  double ergas = 0.0;
  std::size_t cc_skipped_bands = 0;
  std::size_t ergas_floored_bands = 0;

  std::string to_text() const {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed;
    os << "psnr    " << psnr << "\n"
       << "ssim    " << ssim << "\n"
       << "sam     " << sam << "\n"
       << "cc      " << cc << "\n"
       << "rmse    " << rmse << "\n"
       << "ergas   " << ergas << "\n";
    if (cc_skipped_bands)
      os << "cc_skipped_bands " << cc_skipped_bands << "\n";
    if (ergas_floored_bands)
      os << "ergas_floored_bands " << ergas_floored_bands << "\n";
    return os.str();
  }
};

inline MetricReport evaluate(const Tensor& sr, const Tensor& hr,
                             double scale, double peak = 1.0) {
  MetricReport r;
  r.psnr = psnr(sr, hr, peak);
  r.ssim = ssim(sr, hr, peak);
  r.sam = sam_metric(sr, hr);
  r.cc = cc(sr, hr, &r.cc_skipped_bands);
  r.rmse = rmse(sr, hr);
  r.ergas = ergas(sr, hr, scale, &r.ergas_floored_bands);
  return r;
}

}  // namespace hsr
