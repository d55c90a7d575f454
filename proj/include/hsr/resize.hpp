// Bicubic resampling, Catmull-Rom style kernel (a = -0.5), edge
// replication at borders, applied per band. Separable row/column passes.
#pragma once

#include <cmath>

#include "hsr/tensor.hpp"

namespace hsr {

namespace detail {

constexpr double kBicubicA = -0.5;

inline double bicubic_weight(double t) {
  const double a = kBicubicA;
  t = std::fabs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return (((t - 5.0) * t + 8.0) * t - 4.0) * a;
  return 0.0;
}

// 4-tap weights and base index for one output coordinate.
// Sample centers: src = (dst + 0.5) / ratio - 0.5.
inline void bicubic_taps(std::size_t dst, double ratio, long& base,
                         double w[4]) {
  const double src = (double(dst) + 0.5) / ratio - 0.5;
  const double fl = std::floor(src);
  base = long(fl) - 1;
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    w[i] = bicubic_weight(src - (fl - 1.0 + double(i)));
    sum += w[i];
  }
  for (int i = 0; i < 4; ++i) w[i] /= sum;
}

inline std::size_t clamp_index(long i, std::size_t n) {
  if (i < 0) return 0;
  if (i >= long(n)) return n - 1;
  return std::size_t(i);
}

}  // namespace detail

// cube H x W x B, scale applied to both spatial extents; bands untouched.
inline Tensor bicubic_resize(const Tensor& cube, double scale) {
  require(cube.rank() == 3, "bicubic_resize: input must be H x W x B");
  require(scale > 0.0, "bicubic_resize: scale must be positive");
  const std::size_t H = cube.dim(0), W = cube.dim(1), B = cube.dim(2);
  const std::size_t oh = std::size_t(std::llround(scale * double(H)));
  const std::size_t ow = std::size_t(std::llround(scale * double(W)));
  require(oh >= 1 && ow >= 1, "bicubic_resize: output extent < 1");
  const double rh = double(oh) / double(H);
  const double rw = double(ow) / double(W);

  // horizontal pass: H x W x B -> H x ow x B
  Tensor mid({H, ow, B});
  for (std::size_t x = 0; x < ow; ++x) {
    long base;
    double w[4];
    detail::bicubic_taps(x, rw, base, w);
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t b = 0; b < B; ++b) {
        double acc = 0.0;
        for (int i = 0; i < 4; ++i)
          acc += w[i] * cube.at3(y, detail::clamp_index(base + i, W), b);
        mid.at3(y, x, b) = acc;
      }
  }

  // vertical pass: H x ow x B -> oh x ow x B
  Tensor out({oh, ow, B});
  for (std::size_t y = 0; y < oh; ++y) {
    long base;
    double w[4];
    detail::bicubic_taps(y, rh, base, w);
    for (std::size_t x = 0; x < ow; ++x)
      for (std::size_t b = 0; b < B; ++b) {
        double acc = 0.0;
        for (int i = 0; i < 4; ++i)
          acc += w[i] * mid.at3(detail::clamp_index(base + i, H), x, b);
        out.at3(y, x, b) = acc;
      }
  }
  return out;
}

}  // namespace hsr
