// Generic neural primitives: convolution, normalization, linear maps,
// activations, pooling and pixel shuffle. All pure functions on Tensor.
#pragma once

#include <algorithm>
#include <cmath>

#include "hsr/tensor.hpp"

namespace hsr {

// 2-D cross-correlation (no kernel flip), zero padding "same".
// input H x W x Cin, kernel kh x kw x Cin x Cout, bias Cout.
inline Tensor conv2d(const Tensor& input, const Tensor& kernel,
                     const Tensor& bias) {
  require(input.rank() == 3, "conv2d: input must be H x W x C");
  require(kernel.rank() == 4, "conv2d: kernel must be kh x kw x Cin x Cout");
  const std::size_t H = input.dim(0), W = input.dim(1), Ci = input.dim(2);
  const std::size_t kh = kernel.dim(0), kw = kernel.dim(1);
  const std::size_t Co = kernel.dim(3);
  require(kernel.dim(2) == Ci, "conv2d: kernel Cin " +
                                   std::to_string(kernel.dim(2)) +
                                   " != input channels " + std::to_string(Ci));
  require(bias.rank() == 1 && bias.dim(0) == Co,
          "conv2d: bias length must equal Cout");

  const long ph = long(kh) / 2, pw = long(kw) / 2;
  Tensor out({H, W, Co});
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      for (std::size_t co = 0; co < Co; ++co) {
        double acc = bias.data[co];
        for (std::size_t ky = 0; ky < kh; ++ky) {
          const long sy = long(y) + long(ky) - ph;
          if (sy < 0 || sy >= long(H)) continue;
          for (std::size_t kx = 0; kx < kw; ++kx) {
            const long sx = long(x) + long(kx) - pw;
            if (sx < 0 || sx >= long(W)) continue;
            for (std::size_t ci = 0; ci < Ci; ++ci)
              acc += input.at3(std::size_t(sy), std::size_t(sx), ci) *
                     kernel.at4(ky, kx, ci, co);
          }
        }
        out.at3(y, x, co) = acc;
      }
  return out;
}

// Layer normalization over the channel axis, per spatial position.
inline Tensor layer_norm(const Tensor& x, const std::vector<double>& gamma,
                         const std::vector<double>& beta,
                         double eps = 1e-5) {
  require(x.rank() == 3, "layer_norm: input must be H x W x C");
  const std::size_t C = x.dim(2);
  require(C > 0, "layer_norm: empty channel axis");
  require(gamma.size() == C && beta.size() == C,
          "layer_norm: affine length must equal channels");
  Tensor out(x.shape);
  const std::size_t HW = x.dim(0) * x.dim(1);
  for (std::size_t p = 0; p < HW; ++p) {
    const double* row = &x.data[p * C];
    double mean = 0.0;
    for (std::size_t c = 0; c < C; ++c) mean += row[c];
    mean /= double(C);
    double var = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double d = row[c] - mean;
      var += d * d;
    }
    var /= double(C);
    const double inv = 1.0 / std::sqrt(var + eps);
    double* orow = &out.data[p * C];
    for (std::size_t c = 0; c < C; ++c)
      orow[c] = (row[c] - mean) * inv * gamma[c] + beta[c];
  }
  return out;
}

// H x W x (r^2*C) -> rH x rW x C.
// out(y, x, c) = in(y/r, x/r, c*r^2 + (y%r)*r + (x%r))
inline Tensor pixel_shuffle(const Tensor& x, std::size_t r) {
  require(x.rank() == 3, "pixel_shuffle: input must be H x W x C");
  require(r >= 1, "pixel_shuffle: r must be >= 1");
  const std::size_t H = x.dim(0), W = x.dim(1), Cr = x.dim(2);
  require(Cr % (r * r) == 0,
          "pixel_shuffle: channels " + std::to_string(Cr) +
              " not divisible by r^2 = " + std::to_string(r * r));
  const std::size_t C = Cr / (r * r);
  Tensor out({H * r, W * r, C});
  for (std::size_t y = 0; y < H * r; ++y)
    for (std::size_t x2 = 0; x2 < W * r; ++x2)
      for (std::size_t c = 0; c < C; ++c)
        out.at3(y, x2, c) =
            x.at3(y / r, x2 / r, c * r * r + (y % r) * r + (x2 % r));
  return out;
}

// Exact inverse of pixel_shuffle.
inline Tensor pixel_unshuffle(const Tensor& x, std::size_t r) {
  require(x.rank() == 3, "pixel_unshuffle: input must be H x W x C");
  const std::size_t Hr = x.dim(0), Wr = x.dim(1), C = x.dim(2);
  require(Hr % r == 0 && Wr % r == 0,
          "pixel_unshuffle: extents not divisible by r");
  Tensor out({Hr / r, Wr / r, C * r * r});
  for (std::size_t y = 0; y < Hr; ++y)
    for (std::size_t x2 = 0; x2 < Wr; ++x2)
      for (std::size_t c = 0; c < C; ++c)
        out.at3(y / r, x2 / r, c * r * r + (y % r) * r + (x2 % r)) =
            x.at3(y, x2, c);
  return out;
}

// y = W x + b, W is out x in.
inline std::vector<double> linear(const std::vector<double>& x,
                                  const Tensor& W,
                                  const std::vector<double>& b) {
  require(W.rank() == 2, "linear: W must be 2-D");
  const std::size_t rows = W.dim(0), cols = W.dim(1);
  require(x.size() == cols, "linear: input length " +
                                std::to_string(x.size()) + " != W cols " +
                                std::to_string(cols));
  require(b.size() == rows, "linear: bias length != W rows");
  std::vector<double> y(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = b[i];
    const double* wr = &W.data[i * cols];
    for (std::size_t j = 0; j < cols; ++j) acc += wr[j] * x[j];
    y[i] = acc;
  }
  return y;
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double softplus(double x) {
  // log1p(exp(x)) with overflow guard
  return x > 30.0 ? x : std::log1p(std::exp(x));
}
inline double softplus_inverse(double y) { return std::log(std::expm1(y)); }

inline std::vector<double> global_average_pool(const Tensor& x) {
  require(x.rank() == 3, "global_average_pool: input must be H x W x C");
  const std::size_t HW = x.dim(0) * x.dim(1), C = x.dim(2);
  std::vector<double> mean(C, 0.0);
  for (std::size_t p = 0; p < HW; ++p)
    for (std::size_t c = 0; c < C; ++c) mean[c] += x.data[p * C + c];
  for (double& m : mean) m /= double(HW);
  return mean;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape == b.shape, "add: shape mismatch");
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.size(); ++i)
    out.data[i] = a.data[i] + b.data[i];
  return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.shape == b.shape, "mul: shape mismatch");
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.size(); ++i)
    out.data[i] = a.data[i] * b.data[i];
  return out;
}

}  // namespace hsr
