// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "textspotter/ndops/lstm.hpp"
#include "textspotter/ndops/ops.hpp"
#include "textspotter/ndops/tensor.hpp"
#include "textspotter/recognizer/charset.hpp"
#include "textspotter/text_align/pooling.hpp"

namespace textspotter::recognizer {

using ndops::Gradients;
using ndops::ParamSet;
using ndops::Shape;
using ndops::Tensor;

struct RecognizerConfig {
  std::size_t in_channels = 32;
  std::size_t conv_channels = 32;
  std::size_t hidden = 64;        // per LSTM direction and for the decoder
  std::size_t attention_dim = 32;
  std::size_t embed_dim = 16;
  std::size_t grid_w = 32;
  std::size_t grid_h = 4;
  bool position_embedding = true;
  CharSet charset = CharSet::alphanumeric();

  /// Stride-(2,1) convolution blocks needed to collapse grid_h to 1.
  std::size_t conv_blocks() const {
    std::size_t n = 0;
    for (std::size_t h = grid_h; h > 1; h = (h - 1) / 2 + 1) ++n;
    return std::max<std::size_t>(n, 1);
  }
  std::size_t state_dim() const { return 2 * hidden; }
  std::size_t decoder_input_dim() const { return embed_dim + state_dim() + grid_w; }
};

/// Adds the recognizer's parameters (all prefixed "rec.") to `params`,
/// zero-initialized.
inline void add_recognizer_params(ParamSet& params, const RecognizerConfig& cfg) {
  const std::size_t m = cfg.hidden, a = cfg.attention_dim;
  std::size_t cin = cfg.in_channels;
  for (std::size_t b = 0; b < cfg.conv_blocks(); ++b) {
    const std::string p = "rec.conv" + std::to_string(b);
    params.emplace(p + ".k", Tensor({cfg.conv_channels, cin, 3, 3}));
    params.emplace(p + ".b", Tensor({cfg.conv_channels}));
    cin = cfg.conv_channels;
  }
  for (const char* dir : {"rec.enc_fw", "rec.enc_bw"}) {
    params.emplace(std::string(dir) + ".Wx", Tensor({cfg.conv_channels, 4 * m}));
    params.emplace(std::string(dir) + ".Wh", Tensor({m, 4 * m}));
    params.emplace(std::string(dir) + ".b", Tensor({4 * m}));
  }
  params.emplace("rec.att.W1", Tensor({m, a}));
  params.emplace("rec.att.W2", Tensor({cfg.state_dim(), a}));
  params.emplace("rec.att.b", Tensor({a}));
  params.emplace("rec.att.v", Tensor({a}));
  params.emplace("rec.embed", Tensor({cfg.charset.num_input_tokens(), cfg.embed_dim}));
  params.emplace("rec.dec.Wx", Tensor({cfg.decoder_input_dim(), 4 * m}));
  params.emplace("rec.dec.Wh", Tensor({m, 4 * m}));
  params.emplace("rec.dec.b", Tensor({4 * m}));
  params.emplace("rec.out.W", Tensor({m + cfg.state_dim(), cfg.charset.num_classes()}));
  params.emplace("rec.out.b", Tensor({cfg.charset.num_classes()}));
}

// ---------------------------------------------------------------------------
// encoder

/// Encoder output: one 2m-dim state per grid column plus the column centers
/// (image pixels along the text axis) that attention centers are measured in.
struct EncoderStates {
  std::vector<Tensor> states;
  std::vector<double> column_centers;

  std::size_t width() const { return states.size(); }
};

struct EncoderCache {
  std::vector<Tensor> block_in;   // [C,h,w] input of each conv block
  std::vector<Tensor> block_out;  // activated output of each conv block
  ndops::BiLstmCache lstm;
};

inline ndops::ConvGeometry encoder_conv_geometry() { return {2, 1, 1, 1}; }

/// Convolution blocks collapse the pooled h x w x C features to height 1,
/// then a bidirectional LSTM runs over the w columns.
inline EncoderStates encode_sequence(const text_align::PooledFeature& pooled,
                                     const ParamSet& params, const RecognizerConfig& cfg,
                                     EncoderCache* cache = nullptr) {
  const Tensor& x = pooled.tensor;
  if (x.rank() != 3) throw DimensionError("encode_sequence: pooled tensor must be [h,w,C]");
  if (x.dim(1) < 1) throw ContractError("encode_sequence: w must be >= 1");
  EncoderCache local;
  Tensor cur = ndops::hwc_to_chw(x);
  for (std::size_t b = 0; b < cfg.conv_blocks(); ++b) {
    const std::string p = "rec.conv" + std::to_string(b);
    local.block_in.push_back(cur);
    cur = ndops::elu(ndops::conv2d(cur, params.at(p + ".k"), encoder_conv_geometry(),
                                   &params.at(p + ".b")));
    local.block_out.push_back(cur);
  }
  if (cur.dim(1) != 1) {
    throw DimensionError("encode_sequence: grid height " + std::to_string(x.dim(0)) +
                         " does not collapse to 1 with the configured blocks");
  }
  const std::size_t C = cur.dim(0), w = cur.dim(2);
  std::vector<Tensor> seq(w, Tensor({C}));
  for (std::size_t j = 0; j < w; ++j) {
    for (std::size_t c = 0; c < C; ++c) seq[j][c] = cur.at(c, 0, j);
  }
  EncoderStates out;
  out.states = ndops::bilstm_encode(seq, ndops::lstm_weights(params, "rec.enc_fw"),
                                    ndops::lstm_weights(params, "rec.enc_bw"), &local.lstm);
  out.column_centers = pooled.grid.column_centers;
  if (out.column_centers.size() != out.states.size()) {
    throw DimensionError("encode_sequence: grid width does not match state count");
  }
  if (cache) *cache = std::move(local);
  return out;
}

/// Backward of encode_sequence. Returns d(loss)/d(pooled tensor), [h,w,C].
inline Tensor encode_backward(const EncoderCache& cache, const ParamSet& params,
                              const RecognizerConfig& cfg,
                              const std::vector<Tensor>& dstates, Gradients& grads) {
  auto fw = ndops::lstm_weights(params, "rec.enc_fw");
  auto bw = ndops::lstm_weights(params, "rec.enc_bw");
  ndops::LstmGrads gf(fw), gb(bw);
  auto dseq = ndops::bilstm_backward(cache.lstm, fw, bw, dstates, gf, gb);
  gf.add_to(grads, "rec.enc_fw");
  gb.add_to(grads, "rec.enc_bw");

  const Tensor& top = cache.block_out.back();
  const std::size_t C = top.dim(0), w = top.dim(2);
  Tensor d({C, 1, w});
  for (std::size_t j = 0; j < w; ++j) {
    for (std::size_t c = 0; c < C; ++c) d.at(c, 0, j) = dseq[j][c];
  }
  for (std::size_t r = 0; r < cfg.conv_blocks(); ++r) {
    const std::size_t b = cfg.conv_blocks() - 1 - r;
    const std::string p = "rec.conv" + std::to_string(b);
    Tensor dpre = ndops::elu_backward(cache.block_out[b], d);
    auto g = ndops::conv2d_backward(cache.block_in[b], params.at(p + ".k"),
                                    encoder_conv_geometry(), dpre, true);
    grads.at(p + ".k") += g.dk;
    grads.at(p + ".b") += g.db;
    d = std::move(g.dx);
  }
  return ndops::chw_to_hwc(d);
}

// ---------------------------------------------------------------------------
// attention pieces

/// W2^T h^e_j for every column: [w, a]. Computed once per word.
inline Tensor project_encoder_states(const EncoderStates& enc, const ParamSet& params) {
  const Tensor& W2 = params.at("rec.att.W2");
  const std::size_t w = enc.width(), D = W2.dim(0), a = W2.dim(1);
  Tensor H({w, D});
  for (std::size_t j = 0; j < w; ++j) {
    if (enc.states[j].size() != D) throw DimensionError("attention: state size mismatch");
    std::copy(enc.states[j].ptr(), enc.states[j].ptr() + D, H.ptr() + j * D);
  }
  Tensor P({w, a});
  ndops::detail::gemm_nn(w, a, D, H.ptr(), W2.ptr(), P.ptr());
  return P;
}

/// Additive scores e_j = v . tanh(W1^T h_dec + W2^T h^e_j + b); `hidden_out`
/// receives the tanh activations [w, a] when non-null.
inline Tensor attention_logits(const Tensor& h_dec_prev, const Tensor& enc_proj,
                               const ParamSet& params, Tensor* hidden_out = nullptr) {
  const Tensor& W1 = params.at("rec.att.W1");
  const Tensor& b = params.at("rec.att.b");
  const Tensor& v = params.at("rec.att.v");
  const std::size_t w = enc_proj.dim(0), a = enc_proj.dim(1);
  if (h_dec_prev.size() != W1.dim(0) || W1.dim(1) != a) {
    throw DimensionError("attention_scores: decoder state size mismatch");
  }
  std::vector<double> q(b.ptr(), b.ptr() + a);
  ndops::detail::gemm_nn(1, a, W1.dim(0), h_dec_prev.ptr(), W1.ptr(), q.data());
  Tensor hid({w, a});
  Tensor e({w});
  for (std::size_t j = 0; j < w; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < a; ++k) {
      const double t = std::tanh(enc_proj.at(j, k) + q[k]);
      hid.at(j, k) = t;
      s += v[k] * t;
    }
    e[j] = s;
  }
  if (hidden_out) *hidden_out = std::move(hid);
  return e;
}

/// alpha = softmax_j(e_j).
inline Tensor attention_scores(const Tensor& h_dec_prev, const EncoderStates& enc,
                               const ParamSet& params) {
  return ndops::softmax(attention_logits(h_dec_prev, project_encoder_states(enc, params),
                                         params));
}

/// g = sum_j alpha_j h^e_j.
inline Tensor context_vector(const Tensor& alpha, const EncoderStates& enc) {
  if (alpha.size() != enc.width() || enc.states.empty()) {
    throw DimensionError("context_vector: " + std::to_string(alpha.size()) +
                         " weights for " + std::to_string(enc.width()) + " states");
  }
  Tensor g(enc.states[0].shape());
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += alpha[j] * enc.states[j][k];
  }
  return g;
}

/// delta = sum_j alpha_j p_j.
inline double attention_center(std::span<const double> alpha,
                               std::span<const double> column_centers) {
  if (alpha.size() != column_centers.size()) {
    throw DimensionError("attention_center: length mismatch");
  }
  double d = 0.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) d += alpha[j] * column_centers[j];
  return d;
}

/// Index of the largest weight; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

// ---------------------------------------------------------------------------
// decoder

struct DecoderState {
  Tensor h;
  Tensor c;
};

inline DecoderState initial_decoder_state(const RecognizerConfig& cfg) {
  return {Tensor({cfg.hidden}), Tensor({cfg.hidden})};
}

/// One decode step's record.
struct AttentionStep {
  std::vector<double> alpha;
  double delta = 0.0;
  std::size_t label = 0;  // argmax of the logits
  std::size_t peak = 0;   // u_t: index of the one-hot position embedding
};

using AttentionTrace = std::vector<AttentionStep>;

struct DecodeStepCache {
  Tensor h_prev;
  Tensor alpha;
  Tensor att_hidden;  // [w, a]
  Tensor g;
  std::size_t y_prev = 0;
  ndops::LstmStepCache lstm;
  Tensor readout;  // [1, m + 2m] = concat(h_t, g)
};

struct DecodeStepOutput {
  Tensor logits;
  DecoderState state;
  AttentionStep step;
};

/// One-hot position embedding of length w at `peak`, or all zeros when the
/// embedding is disabled.
inline Tensor position_embedding(std::size_t w, std::size_t peak, bool enabled) {
  Tensor u({w});
  if (enabled) u[peak] = 1.0;
  return u;
}

/// Attention, context, LSTM update and readout for one step.
/// The LSTM consumes [embed(y_prev); g; u]; logits = affine([h_t; g]).
inline DecodeStepOutput decode_step(const DecoderState& state, std::size_t y_prev,
                                    const EncoderStates& enc, const Tensor& enc_proj,
                                    const ParamSet& params, const RecognizerConfig& cfg,
                                    DecodeStepCache* cache = nullptr) {
  if (enc.width() != cfg.grid_w) {
    throw DimensionError("decode_step: encoder width " + std::to_string(enc.width()) +
                         " != configured grid width " + std::to_string(cfg.grid_w));
  }
  if (y_prev >= cfg.charset.num_input_tokens()) {
    throw ContractError("decode_step: invalid previous label");
  }
  DecodeStepCache c;
  c.h_prev = state.h;
  c.y_prev = y_prev;
  c.alpha = ndops::softmax(attention_logits(state.h, enc_proj, params, &c.att_hidden));
  c.g = context_vector(c.alpha, enc);

  DecodeStepOutput out;
  out.step.alpha.assign(c.alpha.ptr(), c.alpha.ptr() + c.alpha.size());
  out.step.delta = attention_center(out.step.alpha, enc.column_centers);
  out.step.peak = argmax(out.step.alpha);

  const Tensor& E = params.at("rec.embed");
  const std::size_t e = cfg.embed_dim, D = cfg.state_dim();
  Tensor x({cfg.decoder_input_dim()});
  std::copy(E.ptr() + y_prev * e, E.ptr() + (y_prev + 1) * e, x.ptr());
  std::copy(c.g.ptr(), c.g.ptr() + D, x.ptr() + e);
  if (cfg.position_embedding) x[e + D + out.step.peak] = 1.0;

  auto next = ndops::lstm_step(x, state.h, state.c, ndops::lstm_weights(params, "rec.dec"),
                               &c.lstm);
  const std::size_t m = cfg.hidden;
  c.readout = Tensor({1, m + D});
  std::copy(next.h.ptr(), next.h.ptr() + m, c.readout.ptr());
  std::copy(c.g.ptr(), c.g.ptr() + D, c.readout.ptr() + m);
  Tensor logits = ndops::affine(c.readout, params.at("rec.out.W"), params.at("rec.out.b"));
  out.logits = logits.reshaped({cfg.charset.num_classes()});
  out.step.label = argmax(out.logits.data());
  out.state = {std::move(next.h), std::move(next.c)};
  if (cache) *cache = std::move(c);
  return out;
}

/// A teacher-forced forward pass over one word, with everything needed for
/// the backward pass.
struct WordGraph {
  EncoderCache encoder_cache;
  EncoderStates encoder;
  Tensor enc_proj;
  std::vector<DecodeStepCache> steps;
  std::vector<Tensor> logits;
  AttentionTrace trace;

  std::vector<double> deltas() const {
    std::vector<double> d;
    d.reserve(trace.size());
    for (const auto& s : trace) d.push_back(s.delta);
    return d;
  }
};

/// Runs the decoder for targets.size() steps, feeding the ground-truth
/// previous label (start token first).
inline WordGraph forward_teacher_forced(const text_align::PooledFeature& pooled,
                                        const std::vector<std::size_t>& targets,
                                        const ParamSet& params,
                                        const RecognizerConfig& cfg) {
  WordGraph g;
  g.encoder = encode_sequence(pooled, params, cfg, &g.encoder_cache);
  g.enc_proj = project_encoder_states(g.encoder, params);
  DecoderState state = initial_decoder_state(cfg);
  std::size_t y_prev = cfg.charset.start_token();
  for (std::size_t t = 0; t < targets.size(); ++t) {
    DecodeStepCache cache;
    auto out = decode_step(state, y_prev, g.encoder, g.enc_proj, params, cfg, &cache);
    g.steps.push_back(std::move(cache));
    g.logits.push_back(std::move(out.logits));
    g.trace.push_back(std::move(out.step));
    state = std::move(out.state);
    y_prev = targets[t];
  }
  return g;
}

/// Backward through a WordGraph. dlogits[t] = dL/dlogits_t; ddelta[t] =
/// dL/d(delta_t) (may be shorter than the step count or empty). Parameter
/// gradients accumulate into `grads`; returns dL/d(pooled tensor).
inline Tensor backward_word(const WordGraph& g, const std::vector<Tensor>& dlogits,
                            const std::vector<double>& ddelta, const ParamSet& params,
                            const RecognizerConfig& cfg, Gradients& grads) {
  const std::size_t T = g.steps.size();
  if (dlogits.size() != T) throw DimensionError("backward_word: dlogits length mismatch");
  const std::size_t m = cfg.hidden, D = cfg.state_dim(), e = cfg.embed_dim;
  const std::size_t w = g.encoder.width();
  const Tensor& W1 = params.at("rec.att.W1");
  const Tensor& W2 = params.at("rec.att.W2");
  const Tensor& v = params.at("rec.att.v");
  const std::size_t a = W1.dim(1);
  auto dec = ndops::lstm_weights(params, "rec.dec");
  ndops::LstmGrads dec_grads(dec);

  std::vector<Tensor> dstates(w, Tensor({D}));
  Tensor dP({w, a});  // gradient w.r.t. enc_proj
  Tensor dh_next({m}), dc_next({m});
  Tensor& dW1 = grads.at("rec.att.W1");
  Tensor& db_att = grads.at("rec.att.b");
  Tensor& dv = grads.at("rec.att.v");
  Tensor& dE = grads.at("rec.embed");

  for (std::size_t r = 0; r < T; ++r) {
    const std::size_t t = T - 1 - r;
    const DecodeStepCache& c = g.steps[t];
    // readout
    Tensor dz = dlogits[t].reshaped({1, dlogits[t].size()});
    auto ag = ndops::affine_backward(c.readout, params.at("rec.out.W"), dz);
    grads.at("rec.out.W") += ag.dW;
    grads.at("rec.out.b") += ag.db;
    Tensor dh({m});
    Tensor dg({D});
    for (std::size_t k = 0; k < m; ++k) dh[k] = ag.dx[k] + dh_next[k];
    for (std::size_t k = 0; k < D; ++k) dg[k] = ag.dx[m + k];
    // decoder LSTM
    auto lg = ndops::lstm_step_backward(c.lstm, dec, dh, dc_next, dec_grads);
    for (std::size_t k = 0; k < e; ++k) dE.at(c.y_prev, k) += lg.dx[k];
    for (std::size_t k = 0; k < D; ++k) dg[k] += lg.dx[e + k];
    Tensor dh_prev = lg.dh_prev;
    dc_next = lg.dc_prev;
    // context vector and attention center
    Tensor dalpha({w});
    const double dd = t < ddelta.size() ? ddelta[t] : 0.0;
    for (std::size_t j = 0; j < w; ++j) {
      const Tensor& hj = g.encoder.states[j];
      double s = 0.0;
      for (std::size_t k = 0; k < D; ++k) {
        s += dg[k] * hj[k];
        dstates[j][k] += c.alpha[j] * dg[k];
      }
      dalpha[j] = s + dd * g.encoder.column_centers[j];
    }
    // softmax and additive scoring
    Tensor de = ndops::softmax_backward(c.alpha, dalpha, 0);
    std::vector<double> dq(a, 0.0);
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t k = 0; k < a; ++k) {
        const double th = c.att_hidden.at(j, k);
        dv[k] += de[j] * th;
        const double dpre = de[j] * v[k] * (1.0 - th * th);
        dP.at(j, k) += dpre;
        dq[k] += dpre;
      }
    }
    for (std::size_t k = 0; k < a; ++k) db_att[k] += dq[k];
    ndops::detail::gemm_tn(m, a, 1, c.h_prev.ptr(), dq.data(), dW1.ptr());
    ndops::detail::gemm_nt(1, m, a, dq.data(), W1.ptr(), dh_prev.ptr());
    dh_next = std::move(dh_prev);
  }
  dec_grads.add_to(grads, "rec.dec");

  // enc_proj = H W2
  Tensor H({w, D});
  for (std::size_t j = 0; j < w; ++j) {
    std::copy(g.encoder.states[j].ptr(), g.encoder.states[j].ptr() + D, H.ptr() + j * D);
  }
  ndops::detail::gemm_tn(D, a, w, H.ptr(), dP.ptr(), grads.at("rec.att.W2").ptr());
  Tensor dH({w, D});
  ndops::detail::gemm_nt(w, D, a, dP.ptr(), W2.ptr(), dH.ptr());
  for (std::size_t j = 0; j < w; ++j) {
    for (std::size_t k = 0; k < D; ++k) dstates[j][k] += dH.at(j, k);
  }
  return encode_backward(g.encoder_cache, params, cfg, dstates, grads);
}

struct GreedyResult {
  std::vector<std::size_t> labels;  // without EOS
  AttentionTrace trace;             // includes the EOS step when reached
  std::string text;
};

/// Greedy argmax decoding until EOS or `max_len` steps.
inline GreedyResult decode_greedy(const EncoderStates& enc, const ParamSet& params,
                                  const RecognizerConfig& cfg, std::size_t max_len) {
  if (max_len < 1) throw ContractError("decode_greedy: max_len must be >= 1");
  GreedyResult r;
  const Tensor proj = project_encoder_states(enc, params);
  DecoderState state = initial_decoder_state(cfg);
  std::size_t y_prev = cfg.charset.start_token();
  for (std::size_t t = 0; t < max_len; ++t) {
    auto out = decode_step(state, y_prev, enc, proj, params, cfg);
    const std::size_t label = out.step.label;
    r.trace.push_back(std::move(out.step));
    if (label == cfg.charset.eos_index()) break;
    r.labels.push_back(label);
    state = std::move(out.state);
    y_prev = label;
  }
  r.text = cfg.charset.decode(r.labels);
  return r;
}

}  // namespace textspotter::recognizer
