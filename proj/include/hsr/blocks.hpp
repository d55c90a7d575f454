// Composite model blocks: channel attention, the local spatial-spectral
// block (LSSB), the global spectral-correlation block (GSCB), their
// pairing (CSSM) and grouping with a tail convolution (CSMG).
#pragma once

#include <vector>

#include "hsr/layout.hpp"
#include "hsr/nn.hpp"
#include "hsr/ssm.hpp"
#include "hsr/tensor.hpp"

namespace hsr {

struct LayerNormWeights {
  std::vector<double> gamma;
  std::vector<double> beta;
};

struct ChannelAttentionWeights {
  Tensor w_reduce;  // C/r x C
  std::vector<double> b_reduce;
  Tensor w_expand;  // C x C/r
  std::vector<double> b_expand;
};

struct MlpWeights {
  Tensor w_hidden;  // hidden x C
  std::vector<double> b_hidden;
  Tensor w_out;  // C x hidden
  std::vector<double> b_out;
};

struct BlockConfig {
  LayoutConfig window;
  bool lssp_enabled = true;
  bool gsrm_enabled = true;
};

// gates = sigmoid(W2 relu(W1 gap(x))), output = x scaled channel-wise.
inline Tensor channel_attention(const Tensor& x,
                                const ChannelAttentionWeights& w) {
  const std::size_t C = x.dim(2);
  require(w.w_reduce.dim(1) == C && w.w_expand.dim(0) == C,
          "channel_attention: weight width must equal channels");
  std::vector<double> v = global_average_pool(x);
  std::vector<double> z = linear(v, w.w_reduce, w.b_reduce);
  for (double& t : z) t = relu(t);
  std::vector<double> g = linear(z, w.w_expand, w.b_expand);
  for (double& t : g) t = sigmoid(t);
  Tensor out(x.shape);
  const std::size_t HW = x.dim(0) * x.dim(1);
  for (std::size_t p = 0; p < HW; ++p)
    for (std::size_t c = 0; c < C; ++c)
      out.data[p * C + c] = x.data[p * C + c] * g[c];
  return out;
}

// Pointwise two-layer MLP over the channel axis, ReLU in between.
inline Tensor mlp_pointwise(const Tensor& x, const MlpWeights& w) {
  const std::size_t C = x.dim(2), HW = x.dim(0) * x.dim(1);
  require(w.w_hidden.dim(1) == C && w.w_out.dim(0) == C,
          "mlp_pointwise: weight width must equal channels");
  Tensor out(x.shape);
  std::vector<double> tok(C);
  for (std::size_t p = 0; p < HW; ++p) {
    std::copy(x.data.begin() + p * C, x.data.begin() + (p + 1) * C,
              tok.begin());
    std::vector<double> h = linear(tok, w.w_hidden, w.b_hidden);
    for (double& t : h) t = relu(t);
    const std::vector<double> o = linear(h, w.w_out, w.b_out);
    std::copy(o.begin(), o.end(), out.data.begin() + p * C);
  }
  return out;
}

struct LssbWeights {
  LayerNormWeights ln1, ln2;
  BssmWeights bssm;  // scalar tokens (d_model = 1)
  ChannelAttentionWeights ca;
  MlpWeights mlp;
};

struct GscbWeights {
  LayerNormWeights ln1, ln2;
  BssmWeights bssm;
  ChannelAttentionWeights ca;
  MlpWeights mlp;
};

// LSSM: window partition -> per-window bidirectional scan -> merge.
// With LSSP disabled the whole volume is scanned as one BSSC sequence.
inline Tensor lssm(const Tensor& y, const BssmWeights& w,
                   const BlockConfig& cfg) {
  if (!cfg.lssp_enabled) {
    const std::vector<double> seq = bssc_flatten(y);
    return bssc_unflatten(bssm_forward(w, seq, seq.size()), y.dim(0),
                          y.dim(1), y.dim(2));
  }
  std::vector<std::vector<double>> seqs = lssp_partition(y, cfg.window);
  for (auto& s : seqs) s = bssm_forward(w, s, s.size());
  return lssp_merge(seqs, cfg.window, y.dim(0), y.dim(1), y.dim(2));
}

// GSCM: correlation-based band reorder -> BSSC scan -> inverse reorder.
// The inverse permutation is applied before the residual addition so
// residuals align band-wise. With GSRM disabled the natural band order
// is used.
inline Tensor gscm(const Tensor& y, const BssmWeights& w,
                   const BlockConfig& cfg) {
  const Permutation p =
      cfg.gsrm_enabled ? gsrm_order(y) : Permutation::identity(y.dim(2));
  const Tensor yp = apply_band_permutation(y, p, PermDirection::Forward);
  const std::vector<double> seq = bssc_flatten(yp);
  const Tensor scanned = bssc_unflatten(bssm_forward(w, seq, seq.size()),
                                        y.dim(0), y.dim(1), y.dim(2));
  return apply_band_permutation(scanned, p, PermDirection::Inverse);
}

// Fhat = LSSM(LN(F)) + CA(LN(F)) + F;  out = MLP(LN(Fhat)) + Fhat.
// The two branches share one LN evaluation.
inline Tensor lssb_forward(const Tensor& f, const LssbWeights& w,
                           const BlockConfig& cfg) {
  const Tensor y = layer_norm(f, w.ln1.gamma, w.ln1.beta);
  Tensor fhat = add(add(lssm(y, w.bssm, cfg), channel_attention(y, w.ca)), f);
  return add(mlp_pointwise(layer_norm(fhat, w.ln2.gamma, w.ln2.beta), w.mlp),
             fhat);
}

// Same residual structure with GSCM in place of LSSM.
inline Tensor gscb_forward(const Tensor& f, const GscbWeights& w,
                           const BlockConfig& cfg) {
  const Tensor y = layer_norm(f, w.ln1.gamma, w.ln1.beta);
  Tensor fhat = add(add(gscm(y, w.bssm, cfg), channel_attention(y, w.ca)), f);
  return add(mlp_pointwise(layer_norm(fhat, w.ln2.gamma, w.ln2.beta), w.mlp),
             fhat);
}

struct CssmWeights {
  LssbWeights lssb;
  GscbWeights gscb;
};

inline Tensor cssm_forward(const Tensor& f, const CssmWeights& w,
                           const BlockConfig& cfg) {
  return gscb_forward(lssb_forward(f, w.lssb, cfg), w.gscb, cfg);
}

struct CsmgWeights {
  std::vector<CssmWeights> cssms;
  Tensor tail_kernel;  // 3 x 3 x C x C
  std::vector<double> tail_bias;
};

// Configured count of CSSMs, then a 3x3 tail convolution with a
// group-level residual.
inline Tensor csmg_forward(const Tensor& f, const CsmgWeights& w,
                           const BlockConfig& cfg) {
  Tensor x = f;
  for (const CssmWeights& c : w.cssms) x = cssm_forward(x, c, cfg);
  Tensor b(std::vector<std::size_t>{w.tail_bias.size()});
  b.data = w.tail_bias;
  return add(conv2d(x, w.tail_kernel, b), f);
}

}  // namespace hsr
