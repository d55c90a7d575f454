// State-space scan engine: ZOH discretization, recurrent and
// convolutional scan forms, the selective (input-dependent) scan, and
// the bidirectional wrapper used by the model blocks.
//
// A is stored diagonal throughout (per-channel vector of strictly
// negative entries in initialized configurations).
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hsr/nn.hpp"
#include "hsr/tensor.hpp"

namespace hsr {

// Continuous parameters of one single-input single-output SSM channel.
struct SsmParams {
  std::vector<double> a_diag;  // diag(A), size N
  std::vector<double> b;       // N x 1
  std::vector<double> c;       // 1 x N
  double d = 0.0;

  std::size_t state_size() const { return a_diag.size(); }
};

struct DiscretizedSsm {
  std::vector<double> a_bar;  // diag(exp(delta*A))
  std::vector<double> b_bar;
  std::vector<double> c;
  double d = 0.0;
  double delta = 0.0;

  std::size_t state_size() const { return a_bar.size(); }
};

namespace detail {

// ZOH for one diagonal entry: a_bar = exp(delta*a),
// b_bar = (exp(delta*a) - 1)/a * b, first-order limit below 1e-8.
inline void zoh_entry(double a, double b, double delta, double& a_bar,
                      double& b_bar) {
  const double da = delta * a;
  a_bar = std::exp(da);
  if (std::fabs(da) < 1e-8)
    b_bar = delta * b;
  else
    b_bar = std::expm1(da) / a * b;
}

}  // namespace detail

inline DiscretizedSsm discretize(const SsmParams& p, double delta) {
  require(delta > 0.0, "discretize: delta must be positive");
  const std::size_t n = p.state_size();
  require(p.b.size() == n && p.c.size() == n,
          "discretize: B and C must match state size");
  DiscretizedSsm d;
  d.a_bar.resize(n);
  d.b_bar.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    detail::zoh_entry(p.a_diag[i], p.b[i], delta, d.a_bar[i], d.b_bar[i]);
  d.c = p.c;
  d.d = p.d;
  d.delta = delta;
  return d;
}

// RNN form: h_k = Abar h_{k-1} + Bbar x_k, y_k = C h_k + D x_k, h_0 = 0.
inline std::vector<double> scan_recurrent(const DiscretizedSsm& d,
                                          const std::vector<double>& x) {
  require(!x.empty(), "scan_recurrent: empty sequence");
  const std::size_t n = d.state_size();
  require(d.b_bar.size() == n && d.c.size() == n,
          "scan_recurrent: inconsistent parameter sizes");
  std::vector<double> h(n, 0.0), y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    double out = d.d * x[k];
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = d.a_bar[i] * h[i] + d.b_bar[i] * x[k];
      out += d.c[i] * h[i];
    }
    y[k] = out;
  }
  return y;
}

// Convolutional form (LTI only): K = (C Bbar, C Abar Bbar, ...),
// y = x * K + D x. Kernel built from cumulative products of diag(Abar).
inline std::vector<double> scan_convolutional(const DiscretizedSsm& d,
                                              const std::vector<double>& x) {
  require(!x.empty(), "scan_convolutional: empty sequence");
  const std::size_t n = d.state_size(), L = x.size();
  require(d.b_bar.size() == n && d.c.size() == n,
          "scan_convolutional: inconsistent parameter sizes");
  std::vector<double> kernel(L, 0.0);
  std::vector<double> pow_a(n);
  for (std::size_t i = 0; i < n; ++i) pow_a[i] = 1.0;
  for (std::size_t l = 0; l < L; ++l) {
    double k = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      k += d.c[i] * pow_a[i] * d.b_bar[i];
      pow_a[i] *= d.a_bar[i];
    }
    kernel[l] = k;
  }
  std::vector<double> y(L, 0.0);
  for (std::size_t k = 0; k < L; ++k) {
    double acc = d.d * x[k];
    for (std::size_t l = 0; l <= k; ++l) acc += kernel[l] * x[k - l];
    y[k] = acc;
  }
  return y;
}

// Selective (Mamba-style) parameterization over d_model channels with a
// shared state size N. Delta is per token per channel; B_k and C_k are
// affine maps of the token shared across channels; A and D are fixed per
// channel.
struct SelectiveParams {
  std::size_t d_model = 0;
  std::size_t state_size = 0;
  Tensor a;        // d_model x N, diag(A) per channel
  std::vector<double> d_skip;  // d_model
  Tensor w_delta;  // d_model x d_model
  std::vector<double> b_delta;
  Tensor w_b;      // N x d_model
  std::vector<double> b_b;
  Tensor w_c;      // N x d_model
  std::vector<double> b_c;

  void validate() const {
    require(a.rank() == 2 && a.dim(0) == d_model && a.dim(1) == state_size,
            "SelectiveParams: A must be d_model x N");
    require(d_skip.size() == d_model, "SelectiveParams: D size");
    require(w_delta.rank() == 2 && w_delta.dim(0) == d_model &&
                w_delta.dim(1) == d_model && b_delta.size() == d_model,
            "SelectiveParams: delta projection size");
    require(w_b.rank() == 2 && w_b.dim(0) == state_size &&
                w_b.dim(1) == d_model && b_b.size() == state_size,
            "SelectiveParams: B projection size");
    require(w_c.rank() == 2 && w_c.dim(0) == state_size &&
                w_c.dim(1) == d_model && b_c.size() == state_size,
            "SelectiveParams: C projection size");
  }
};

// x is L tokens of d_model values, row-major L x d_model. Each channel
// runs the recurrence with per-token ZOH discretization of its diagonal A.
inline std::vector<double> selective_scan(const SelectiveParams& sp,
                                          const std::vector<double>& x,
                                          std::size_t len) {
  sp.validate();
  const std::size_t d = sp.d_model, n = sp.state_size;
  require(len >= 1 && x.size() == len * d,
          "selective_scan: sequence size must be L x d_model");
  std::vector<double> y(len * d, 0.0);
  std::vector<double> h(d * n, 0.0);
  std::vector<double> bk(n), ck(n), delta(d);
  std::vector<double> tok(d);
  for (std::size_t k = 0; k < len; ++k) {
    std::copy(x.begin() + k * d, x.begin() + (k + 1) * d, tok.begin());
    bk = linear(tok, sp.w_b, sp.b_b);
    ck = linear(tok, sp.w_c, sp.b_c);
    const std::vector<double> pre = linear(tok, sp.w_delta, sp.b_delta);
    for (std::size_t ch = 0; ch < d; ++ch) delta[ch] = softplus(pre[ch]);
    for (std::size_t ch = 0; ch < d; ++ch) {
      double* hc = &h[ch * n];
      const double* ac = &sp.a.data[ch * n];
      double out = sp.d_skip[ch] * tok[ch];
      for (std::size_t i = 0; i < n; ++i) {
        double a_bar, b_bar;
        detail::zoh_entry(ac[i], bk[i], delta[ch], a_bar, b_bar);
        hc[i] = a_bar * hc[i] + b_bar * tok[ch];
        out += ck[i] * hc[i];
      }
      y[k * d + ch] = out;
    }
  }
  return y;
}

// Bidirectional wrapper: selective scans over x and reverse(x) with
// separate parameter sets, elementwise sum of the re-aligned outputs,
// then one shared linear projection.
struct BssmWeights {
  SelectiveParams forward;
  SelectiveParams backward;
  Tensor w_proj;  // d_model x d_model
  std::vector<double> b_proj;
};

inline std::vector<double> bssm_forward(const BssmWeights& w,
                                        const std::vector<double>& x,
                                        std::size_t len) {
  const std::size_t d = w.forward.d_model;
  require(w.backward.d_model == d, "bssm_forward: direction width mismatch");
  require(x.size() == len * d, "bssm_forward: sequence size");

  const std::vector<double> yf = selective_scan(w.forward, x, len);

  std::vector<double> xr(x.size());
  for (std::size_t k = 0; k < len; ++k)
    std::copy(x.begin() + (len - 1 - k) * d, x.begin() + (len - k) * d,
              xr.begin() + k * d);
  const std::vector<double> yb = selective_scan(w.backward, xr, len);

  std::vector<double> out(x.size());
  std::vector<double> tok(d);
  for (std::size_t k = 0; k < len; ++k) {
    for (std::size_t ch = 0; ch < d; ++ch)
      tok[ch] = yf[k * d + ch] + yb[(len - 1 - k) * d + ch];
    const std::vector<double> p = linear(tok, w.w_proj, w.b_proj);
    std::copy(p.begin(), p.end(), out.begin() + k * d);
  }
  return out;
}

}  // namespace hsr
