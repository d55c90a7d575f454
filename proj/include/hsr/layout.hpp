// Invertible layout transforms serializing 3-D feature volumes into scan
// sequences: BSSC traversal, local window partitioning, and the global
// spectral reordering permutation.
//
// BSSC order: channel slabs are visited in sequence; within an
// even-indexed slab the spatial raster runs row-major ascending, within
// an odd-indexed slab it runs row-major descending (serpentine), so the
// sequence is spatially continuous at slab boundaries.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hsr/tensor.hpp"

namespace hsr {

struct LayoutConfig {
  std::size_t win_h = 4;
  std::size_t win_w = 4;
  std::size_t win_c = 8;
};

struct Permutation {
  std::vector<std::size_t> fwd;  // fwd[k] = source index at output slot k
  std::vector<std::size_t> inv;  // inv[fwd[k]] = k

  static Permutation identity(std::size_t n) {
    Permutation p;
    p.fwd.resize(n);
    std::iota(p.fwd.begin(), p.fwd.end(), std::size_t(0));
    p.inv = p.fwd;
    return p;
  }

  static Permutation from_forward(std::vector<std::size_t> fwd) {
    Permutation p;
    p.inv.assign(fwd.size(), 0);
    for (std::size_t k = 0; k < fwd.size(); ++k) {
      require(fwd[k] < fwd.size(), "Permutation: index out of range");
      p.inv[fwd[k]] = k;
    }
    p.fwd = std::move(fwd);
    return p;
  }
};

namespace detail {

// Flat index into an H x W x C volume for sequence position s of a BSSC
// traversal over that volume.
inline std::size_t bssc_source(std::size_t s, std::size_t H, std::size_t W,
                               std::size_t C) {
  const std::size_t HW = H * W;
  const std::size_t c = s / HW;
  std::size_t p = s % HW;
  if (c % 2 == 1) p = HW - 1 - p;
  return p * C + c;  // (h*W + w)*C + c with p = h*W + w
}

}  // namespace detail

inline std::vector<double> bssc_flatten(const Tensor& f) {
  require(f.rank() == 3, "bssc_flatten: input must be H x W x C");
  const std::size_t H = f.dim(0), W = f.dim(1), C = f.dim(2);
  std::vector<double> seq(f.size());
  for (std::size_t s = 0; s < seq.size(); ++s)
    seq[s] = f.data[detail::bssc_source(s, H, W, C)];
  return seq;
}

inline Tensor bssc_unflatten(const std::vector<double>& seq, std::size_t H,
                             std::size_t W, std::size_t C) {
  require(seq.size() == H * W * C, "bssc_unflatten: sequence length");
  Tensor f({H, W, C});
  for (std::size_t s = 0; s < seq.size(); ++s)
    f.data[detail::bssc_source(s, H, W, C)] = seq[s];
  return f;
}

namespace detail {

inline std::size_t pad_to(std::size_t n, std::size_t m) {
  return ((n + m - 1) / m) * m;
}

// Replicate-edge padding up to the next multiple of the window extents.
inline Tensor pad_replicate(const Tensor& f, const LayoutConfig& cfg) {
  const std::size_t H = f.dim(0), W = f.dim(1), C = f.dim(2);
  const std::size_t Hp = pad_to(H, cfg.win_h), Wp = pad_to(W, cfg.win_w),
                    Cp = pad_to(C, cfg.win_c);
  if (Hp == H && Wp == W && Cp == C) return f;
  Tensor out({Hp, Wp, Cp});
  for (std::size_t y = 0; y < Hp; ++y)
    for (std::size_t x = 0; x < Wp; ++x)
      for (std::size_t c = 0; c < Cp; ++c)
        out.at3(y, x, c) = f.at3(std::min(y, H - 1), std::min(x, W - 1),
                                 std::min(c, C - 1));
  return out;
}

}  // namespace detail

// Splits the (padded) volume into h x w x c windows and flattens each
// with a window-local BSSC traversal. Windows are ordered channel-block
// slowest, then rows of blocks, then columns of blocks.
inline std::vector<std::vector<double>> lssp_partition(const Tensor& f,
                                                       const LayoutConfig& cfg) {
  require(f.rank() == 3, "lssp_partition: input must be H x W x C");
  require(cfg.win_h > 0 && cfg.win_w > 0 && cfg.win_c > 0,
          "lssp_partition: window extents must be positive");
  const Tensor p = detail::pad_replicate(f, cfg);
  const std::size_t H = p.dim(0), W = p.dim(1), C = p.dim(2);
  const std::size_t nh = H / cfg.win_h, nw = W / cfg.win_w,
                    nc = C / cfg.win_c;
  std::vector<std::vector<double>> seqs;
  seqs.reserve(nh * nw * nc);
  Tensor win({cfg.win_h, cfg.win_w, cfg.win_c});
  for (std::size_t bc = 0; bc < nc; ++bc)
    for (std::size_t bh = 0; bh < nh; ++bh)
      for (std::size_t bw = 0; bw < nw; ++bw) {
        for (std::size_t y = 0; y < cfg.win_h; ++y)
          for (std::size_t x = 0; x < cfg.win_w; ++x)
            for (std::size_t c = 0; c < cfg.win_c; ++c)
              win.at3(y, x, c) = p.at3(bh * cfg.win_h + y, bw * cfg.win_w + x,
                                       bc * cfg.win_c + c);
        seqs.push_back(bssc_flatten(win));
      }
  return seqs;
}

// Exact inverse of lssp_partition, cropping any replicate padding.
inline Tensor lssp_merge(const std::vector<std::vector<double>>& seqs,
                         const LayoutConfig& cfg, std::size_t H,
                         std::size_t W, std::size_t C) {
  const std::size_t Hp = detail::pad_to(H, cfg.win_h),
                    Wp = detail::pad_to(W, cfg.win_w),
                    Cp = detail::pad_to(C, cfg.win_c);
  const std::size_t nh = Hp / cfg.win_h, nw = Wp / cfg.win_w,
                    nc = Cp / cfg.win_c;
  require(seqs.size() == nh * nw * nc, "lssp_merge: sequence count");
  Tensor p({Hp, Wp, Cp});
  std::size_t idx = 0;
  for (std::size_t bc = 0; bc < nc; ++bc)
    for (std::size_t bh = 0; bh < nh; ++bh)
      for (std::size_t bw = 0; bw < nw; ++bw, ++idx) {
        require(seqs[idx].size() == cfg.win_h * cfg.win_w * cfg.win_c,
                "lssp_merge: sequence length");
        const Tensor win =
            bssc_unflatten(seqs[idx], cfg.win_h, cfg.win_w, cfg.win_c);
        for (std::size_t y = 0; y < cfg.win_h; ++y)
          for (std::size_t x = 0; x < cfg.win_w; ++x)
            for (std::size_t c = 0; c < cfg.win_c; ++c)
              p.at3(bh * cfg.win_h + y, bw * cfg.win_w + x,
                    bc * cfg.win_c + c) = win.at3(y, x, c);
      }
  if (Hp == H && Wp == W && Cp == C) return p;
  Tensor out({H, W, C});
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      for (std::size_t c = 0; c < C; ++c) out.at3(y, x, c) = p.at3(y, x, c);
  return out;
}

// Pearson correlation between channel pairs over all spatial positions.
// Zero-variance channels correlate 0 with every other channel, 1 with
// themselves.
inline Tensor spectral_correlation_matrix(const Tensor& f) {
  require(f.rank() == 3, "spectral_correlation_matrix: input must be 3-D");
  const std::size_t HW = f.dim(0) * f.dim(1), C = f.dim(2);
  require(HW >= 2, "spectral_correlation_matrix: need at least 2 positions");

  std::vector<double> mean(C, 0.0), sd(C, 0.0);
  for (std::size_t p = 0; p < HW; ++p)
    for (std::size_t c = 0; c < C; ++c) mean[c] += f.data[p * C + c];
  for (double& m : mean) m /= double(HW);
  for (std::size_t p = 0; p < HW; ++p)
    for (std::size_t c = 0; c < C; ++c) {
      const double d = f.data[p * C + c] - mean[c];
      sd[c] += d * d;
    }
  for (double& s : sd) s = std::sqrt(s);

  Tensor m({C, C});
  for (std::size_t i = 0; i < C; ++i) {
    m.at2(i, i) = 1.0;
    for (std::size_t j = i + 1; j < C; ++j) {
      double r = 0.0;
      if (sd[i] > 0.0 && sd[j] > 0.0) {
        double dot = 0.0;
        for (std::size_t p = 0; p < HW; ++p)
          dot += (f.data[p * C + i] - mean[i]) * (f.data[p * C + j] - mean[j]);
        r = dot / (sd[i] * sd[j]);
      }
      m.at2(i, j) = r;
      m.at2(j, i) = r;
    }
  }
  return m;
}

// Per-channel global correlation value: mean of its correlation row
// excluding the self entry.
inline std::vector<double> global_correlation_values(const Tensor& corr) {
  const std::size_t C = corr.dim(0);
  std::vector<double> g(C, 0.0);
  if (C == 1) {
    g[0] = 1.0;
    return g;
  }
  for (std::size_t i = 0; i < C; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < C; ++j)
      if (j != i) s += corr.at2(i, j);
    g[i] = s / double(C - 1);
  }
  return g;
}

// Permutation sorting channels by descending global correlation value,
// ties broken by ascending original index.
inline Permutation gsrm_order(const Tensor& f) {
  const Tensor corr = spectral_correlation_matrix(f);
  const std::vector<double> g = global_correlation_values(corr);
  std::vector<std::size_t> order(g.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return g[a] > g[b]; });
  return Permutation::from_forward(std::move(order));
}

enum class PermDirection { Forward, Inverse };

inline Tensor apply_band_permutation(const Tensor& f, const Permutation& p,
                                     PermDirection dir) {
  require(f.rank() == 3, "apply_band_permutation: input must be 3-D");
  const std::size_t HW = f.dim(0) * f.dim(1), C = f.dim(2);
  require(p.fwd.size() == C, "apply_band_permutation: length " +
                                 std::to_string(p.fwd.size()) +
                                 " != channels " + std::to_string(C));
  const std::vector<std::size_t>& map =
      dir == PermDirection::Forward ? p.fwd : p.inv;
  Tensor out(f.shape);
  for (std::size_t pos = 0; pos < HW; ++pos)
    for (std::size_t k = 0; k < C; ++k)
      out.data[pos * C + k] = f.data[pos * C + map[k]];
  return out;
}

}  // namespace hsr
