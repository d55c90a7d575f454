// Hyperspectral cube container, synthetic cube generation, bicubic
// degradation and patch extraction.
//
// Cube file layout (all integers little-endian):
//   magic "HSCB" | u32 version | u32 H | u32 W | u32 B | u8 dtype (0=f64)
//   | f64 norm_min | f64 norm_max | payload band-sequential f64
//   (band slowest: for b, for h, for w) | u32 CRC32 over everything
//   after the magic.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hsr/model.hpp"  // ByteReader/ByteWriter/crc32/file helpers
#include "hsr/resize.hpp"
#include "hsr/tensor.hpp"

namespace hsr {

struct CubeIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CubeMagicError : CubeIoError {
  using CubeIoError::CubeIoError;
};
struct CubeVersionError : CubeIoError {
  using CubeIoError::CubeIoError;
};
struct CubeTruncatedError : CubeIoError {
  using CubeIoError::CubeIoError;
};
struct CubeChecksumError : CubeIoError {
  using CubeIoError::CubeIoError;
};
struct CubeRangeError : CubeIoError {
  using CubeIoError::CubeIoError;
};

// In-memory cubes are H x W x B tensors with samples in [0,1].
using HsiCube = Tensor;

namespace detail {
constexpr std::uint32_t kCubeVersion = 1;
constexpr std::size_t kCubeHeaderBytes = 4 + 4 + 12 + 1 + 16;
}  // namespace detail

inline void validate_cube(const HsiCube& cube) {
  require(cube.rank() == 3, "cube must be H x W x B");
  for (double v : cube.data)
    if (!(v >= 0.0 && v <= 1.0))
      throw CubeRangeError("cube sample out of [0,1]: " + std::to_string(v));
}

inline void save_cube(const std::string& path, const HsiCube& cube,
                      double norm_min = 0.0, double norm_max = 1.0) {
  validate_cube(cube);
  const std::size_t H = cube.dim(0), W = cube.dim(1), B = cube.dim(2);
  detail::ByteWriter w;
  w.bytes = {'H', 'S', 'C', 'B'};
  w.u32(detail::kCubeVersion);
  w.u32(std::uint32_t(H));
  w.u32(std::uint32_t(W));
  w.u32(std::uint32_t(B));
  w.u8(0);  // dtype f64
  w.f64(norm_min);
  w.f64(norm_max);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) w.f64(cube.at3(y, x, b));
  w.u32(detail::crc32(w.bytes.data() + 4, w.bytes.size() - 4));
  detail::write_file_atomic(path, w.bytes);
}

inline HsiCube load_cube(const std::string& path, double* norm_min = nullptr,
                         double* norm_max = nullptr) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = detail::read_file(path);
  } catch (const WeightIoError& e) {
    throw CubeIoError(e.what());
  }
  if (bytes.size() < 4 || bytes[0] != 'H' || bytes[1] != 'S' ||
      bytes[2] != 'C' || bytes[3] != 'B')
    throw CubeMagicError("bad magic in cube file: " + path);
  if (bytes.size() < detail::kCubeHeaderBytes + 4)
    throw CubeTruncatedError("cube file truncated: " + path);

  detail::ByteReader r(bytes.data() + 4, bytes.size() - 8);
  const std::uint32_t version = r.u32("version");
  if (version != detail::kCubeVersion)
    throw CubeVersionError("unsupported cube format version " +
                           std::to_string(version));
  const std::size_t H = r.u32("height"), W = r.u32("width"),
                    B = r.u32("bands");
  if (H == 0 || W == 0 || B == 0)
    throw CubeIoError("cube header declares a zero extent: " + path);
  const std::uint8_t dtype = r.u8("dtype");
  if (dtype != 0) throw CubeIoError("unknown cube sample type tag");
  const double nmin = r.f64("norm_min"), nmax = r.f64("norm_max");

  const std::size_t expect = detail::kCubeHeaderBytes + H * W * B * 8 + 4;
  if (bytes.size() != expect)
    throw CubeTruncatedError("cube payload: expected " +
                             std::to_string(expect) + " bytes, got " +
                             std::to_string(bytes.size()));
  const std::uint32_t stored =
      std::uint32_t(bytes[bytes.size() - 4]) |
      std::uint32_t(bytes[bytes.size() - 3]) << 8 |
      std::uint32_t(bytes[bytes.size() - 2]) << 16 |
      std::uint32_t(bytes[bytes.size() - 1]) << 24;
  if (detail::crc32(bytes.data() + 4, bytes.size() - 8) != stored)
    throw CubeChecksumError("cube file checksum mismatch: " + path);

  HsiCube cube({H, W, B});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        cube.at3(y, x, b) = r.f64("sample");
  validate_cube(cube);
  if (norm_min) *norm_min = nmin;
  if (norm_max) *norm_max = nmax;
  return cube;
}

enum class SynthProfile { SmoothGaussians, BandCorrelatedMixtures,
                          CheckerEdges };

inline SynthProfile parse_profile(const std::string& s) {
  if (s == "smooth") return SynthProfile::SmoothGaussians;
  if (s == "mixtures") return SynthProfile::BandCorrelatedMixtures;
  if (s == "checker") return SynthProfile::CheckerEdges;
  throw ValueError("unknown synth profile: " + s);
}

// Deterministic synthetic cubes.
//   smooth:   sum of broad spatial Gaussian bumps with smooth spectra.
//   mixtures: material endmembers with disjoint dominant band groups
//             mixed by smooth abundance maps; bands inside one material
//             group correlate strongly.
//   checker:  per-band checkerboards with band-dependent phase.
inline HsiCube synth_cube(Rng& rng, std::size_t H, std::size_t W,
                          std::size_t B, SynthProfile profile) {
  HsiCube cube({H, W, B});

  auto gaussian_field = [&](double sigma_frac) {
    std::vector<double> field(H * W, 0.0);
    const int bumps = 3;
    for (int k = 0; k < bumps; ++k) {
      const double cy = rng.uniform(0.2, 0.8) * double(H);
      const double cx = rng.uniform(0.2, 0.8) * double(W);
      const double s = sigma_frac * double(std::max(H, W));
      const double amp = rng.uniform(0.5, 1.0);
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
          const double dy = (double(y) - cy) / s, dx = (double(x) - cx) / s;
          field[y * W + x] += amp * std::exp(-(dx * dx + dy * dy));
        }
    }
    return field;
  };

  switch (profile) {
    case SynthProfile::SmoothGaussians: {
      const std::vector<double> base = gaussian_field(0.45);
      const double phase = rng.uniform(0.0, 6.28);
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
          for (std::size_t b = 0; b < B; ++b) {
            const double spec =
                0.5 + 0.5 * std::cos(phase + 2.0 * double(b) / double(B));
            cube.at3(y, x, b) = base[y * W + x] * spec;
          }
      break;
    }
    case SynthProfile::BandCorrelatedMixtures: {
      const std::size_t materials = std::min<std::size_t>(2 + B / 8, 4);
      std::vector<std::vector<double>> abundance;
      for (std::size_t m = 0; m < materials; ++m)
        abundance.push_back(gaussian_field(0.3));
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t m = b * materials / B;  // dominant material group
        for (std::size_t y = 0; y < H; ++y)
          for (std::size_t x = 0; x < W; ++x) {
            double v = abundance[m][y * W + x];
            // faint leak from the other materials keeps bands distinct
            v += 0.02 * double(b % 5) / 5.0 *
                 abundance[(m + 1) % materials][y * W + x];
            cube.at3(y, x, b) = v;
          }
      }
      break;
    }
    case SynthProfile::CheckerEdges: {
      const std::size_t cell = std::max<std::size_t>(2, H / 8);
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t shift = b % cell;
        for (std::size_t y = 0; y < H; ++y)
          for (std::size_t x = 0; x < W; ++x) {
            const bool on = (((y + shift) / cell) + (x / cell)) % 2 == 0;
            cube.at3(y, x, b) = on ? 0.85 : 0.15;
          }
      }
      break;
    }
  }

  // min-max normalize into [0, 1]
  const auto [lo_it, hi_it] =
      std::minmax_element(cube.data.begin(), cube.data.end());
  const double lo = *lo_it, hi = *hi_it;
  const double span = hi - lo;
  if (span > 0.0)
    for (double& v : cube.data) v = (v - lo) / span;
  else
    for (double& v : cube.data) v = 0.5;
  return cube;
}

// Per-band bicubic downsampling by 1/s.
inline HsiCube degrade(const HsiCube& hr, std::size_t s) {
  require(s >= 1, "degrade: scale must be >= 1");
  require(hr.dim(0) % s == 0 && hr.dim(1) % s == 0,
          "degrade: extents not divisible by scale");
  Tensor lr = bicubic_resize(hr, 1.0 / double(s));
  // interpolation can overshoot slightly at edges; clip back into range
  for (double& v : lr.data) v = std::clamp(v, 0.0, 1.0);
  return lr;
}

// Deterministic raster-order patches.
inline std::vector<HsiCube> extract_patches(const HsiCube& cube,
                                            std::size_t patch,
                                            std::size_t stride) {
  require(patch >= 1 && stride >= 1, "extract_patches: bad parameters");
  const std::size_t H = cube.dim(0), W = cube.dim(1), B = cube.dim(2);
  require(patch <= H && patch <= W, "extract_patches: patch exceeds extents");
  std::vector<HsiCube> out;
  for (std::size_t y = 0; y + patch <= H; y += stride)
    for (std::size_t x = 0; x + patch <= W; x += stride) {
      HsiCube p({patch, patch, B});
      for (std::size_t dy = 0; dy < patch; ++dy)
        for (std::size_t dx = 0; dx < patch; ++dx)
          for (std::size_t b = 0; b < B; ++b)
            p.at3(dy, dx, b) = cube.at3(y + dy, x + dx, b);
      out.push_back(std::move(p));
    }
  return out;
}

// Raw float dump import (band-sequential little-endian f32 or f64),
// min-max normalized into [0,1].
inline HsiCube import_raw(const std::string& path, std::size_t H,
                          std::size_t W, std::size_t B, bool f64,
                          double* norm_min = nullptr,
                          double* norm_max = nullptr) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = detail::read_file(path);
  } catch (const WeightIoError& e) {
    throw CubeIoError(e.what());
  }
  const std::size_t sample = f64 ? 8 : 4;
  if (bytes.size() != H * W * B * sample)
    throw CubeTruncatedError("raw import: expected " +
                             std::to_string(H * W * B * sample) +
                             " bytes, got " + std::to_string(bytes.size()));
  detail::ByteReader r(bytes.data(), bytes.size());
  HsiCube cube({H, W, B});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        cube.at3(y, x, b) = f64 ? r.f64("sample") : double(r.f32("sample"));
  if (!all_finite(cube)) throw CubeIoError("raw import: non-finite sample");
  const auto [lo_it, hi_it] =
      std::minmax_element(cube.data.begin(), cube.data.end());
  const double lo = *lo_it, hi = *hi_it;
  const double span = hi - lo;
  if (norm_min) *norm_min = lo;
  if (norm_max) *norm_max = hi;
  if (span > 0.0)
    for (double& v : cube.data) v = (v - lo) / span;
  else
    for (double& v : cube.data) v = 0.0;
  return cube;
}

}  // namespace hsr
