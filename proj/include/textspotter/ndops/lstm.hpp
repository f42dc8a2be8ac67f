// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "textspotter/ndops/ops.hpp"
#include "textspotter/ndops/tensor.hpp"

namespace textspotter::ndops {

// Gate layout inside the 4m pre-activation vector: input, forget, candidate,
// output.
enum class Gate : std::size_t { kInput = 0, kForget = 1, kCandidate = 2, kOutput = 3 };

/// Read-only view of one LSTM cell's weights: Wx[d,4m], Wh[m,4m], b[4m].
struct LstmWeights {
  const Tensor& Wx;
  const Tensor& Wh;
  const Tensor& b;

  std::size_t input_dim() const { return Wx.dim(0); }
  std::size_t hidden() const { return Wh.dim(0); }

  void validate() const {
    const std::size_t m = Wh.rank() == 2 ? Wh.dim(0) : 0;
    if (Wx.rank() != 2 || Wh.rank() != 2 || b.rank() != 1 || m == 0 ||
        Wh.dim(1) != 4 * m || Wx.dim(1) != 4 * m || b.dim(0) != 4 * m) {
      throw DimensionError("lstm: inconsistent weights Wx" +
                           shape_string(Wx.shape()) + " Wh" +
                           shape_string(Wh.shape()) + " b" +
                           shape_string(b.shape()));
    }
  }
};

inline LstmWeights lstm_weights(const ParamSet& p, const std::string& prefix) {
  return {p.at(prefix + ".Wx"), p.at(prefix + ".Wh"), p.at(prefix + ".b")};
}

struct LstmGrads {
  Tensor dWx;
  Tensor dWh;
  Tensor db;

  explicit LstmGrads(const LstmWeights& w)
      : dWx(w.Wx.shape()), dWh(w.Wh.shape()), db(w.b.shape()) {}

  void add_to(Gradients& g, const std::string& prefix) const {
    g.at(prefix + ".Wx") += dWx;
    g.at(prefix + ".Wh") += dWh;
    g.at(prefix + ".b") += db;
  }
};

struct LstmState {
  Tensor h;
  Tensor c;
};

/// Everything the backward pass needs from one forward step.
struct LstmStepCache {
  Tensor x;
  Tensor h_prev;
  Tensor c_prev;
  std::vector<double> gates;  // activated i, f, g, o (4m)
  Tensor c;
  std::vector<double> tanh_c;
};

namespace detail {

// Runs the cell given the precomputed input contribution zx = x*Wx (4m).
inline LstmStepCache lstm_cell(const Tensor& x, const double* zx,
                               const Tensor& h_prev, const Tensor& c_prev,
                               const LstmWeights& w) {
  const std::size_t m = w.hidden();
  LstmStepCache cache{x, h_prev, c_prev, std::vector<double>(4 * m), Tensor({m}),
                      std::vector<double>(m)};
  std::vector<double> z(w.b.ptr(), w.b.ptr() + 4 * m);
  for (std::size_t k = 0; k < 4 * m; ++k) z[k] += zx[k];
  gemm_nn(1, 4 * m, m, h_prev.ptr(), w.Wh.ptr(), z.data());
  auto& a = cache.gates;
  for (std::size_t k = 0; k < m; ++k) {
    a[k] = sigmoid(z[k]);
    a[m + k] = sigmoid(z[m + k]);
    a[2 * m + k] = std::tanh(z[2 * m + k]);
    a[3 * m + k] = sigmoid(z[3 * m + k]);
    cache.c[k] = a[m + k] * c_prev[k] + a[k] * a[2 * m + k];
    cache.tanh_c[k] = std::tanh(cache.c[k]);
  }
  return cache;
}

inline Tensor cache_h(const LstmStepCache& cache) {
  const std::size_t m = cache.c.size();
  Tensor h({m});
  for (std::size_t k = 0; k < m; ++k) h[k] = cache.gates[3 * m + k] * cache.tanh_c[k];
  return h;
}

// Backward through one cell. Returns dz (4m pre-activations); accumulates
// dWh, db and dh_prev/dc_prev. dWx and dx are left to the caller, which may
// batch them over time.
inline std::vector<double> lstm_cell_backward(const LstmStepCache& cache,
                                              const LstmWeights& w,
                                              const Tensor& dh, const Tensor& dc,
                                              Tensor& dh_prev, Tensor& dc_prev,
                                              LstmGrads& grads) {
  const std::size_t m = w.hidden();
  const auto& a = cache.gates;
  std::vector<double> dz(4 * m);
  for (std::size_t k = 0; k < m; ++k) {
    const double i = a[k], f = a[m + k], g = a[2 * m + k], o = a[3 * m + k];
    const double tc = cache.tanh_c[k];
    const double dct = dc[k] + dh[k] * o * (1.0 - tc * tc);
    dz[3 * m + k] = dh[k] * tc * o * (1.0 - o);
    dz[k] = dct * g * i * (1.0 - i);
    dz[m + k] = dct * cache.c_prev[k] * f * (1.0 - f);
    dz[2 * m + k] = dct * i * (1.0 - g * g);
    dc_prev[k] = dct * f;
  }
  dh_prev = Tensor({m});
  gemm_nt(1, m, 4 * m, dz.data(), w.Wh.ptr(), dh_prev.ptr());
  gemm_tn(m, 4 * m, 1, cache.h_prev.ptr(), dz.data(), grads.dWh.ptr());
  for (std::size_t k = 0; k < 4 * m; ++k) grads.db[k] += dz[k];
  return dz;
}

}  // namespace detail

inline void check_lstm_inputs(const Tensor& x, const Tensor& h_prev,
                              const Tensor& c_prev, const LstmWeights& w) {
  w.validate();
  if (x.rank() != 1 || x.dim(0) != w.input_dim() || h_prev.rank() != 1 ||
      h_prev.dim(0) != w.hidden() || c_prev.shape() != h_prev.shape()) {
    throw DimensionError("lstm_step: x" + shape_string(x.shape()) + " h" +
                         shape_string(h_prev.shape()) + " c" +
                         shape_string(c_prev.shape()) + " for weights Wx" +
                         shape_string(w.Wx.shape()));
  }
}

/// One LSTM step; fills `cache` when given.
inline LstmState lstm_step(const Tensor& x, const Tensor& h_prev,
                           const Tensor& c_prev, const LstmWeights& w,
                           LstmStepCache* cache = nullptr) {
  check_lstm_inputs(x, h_prev, c_prev, w);
  std::vector<double> zx(4 * w.hidden(), 0.0);
  detail::gemm_nn(1, 4 * w.hidden(), w.input_dim(), x.ptr(), w.Wx.ptr(), zx.data());
  auto c = detail::lstm_cell(x, zx.data(), h_prev, c_prev, w);
  LstmState out{detail::cache_h(c), c.c};
  if (cache) *cache = std::move(c);
  return out;
}

struct LstmStepGrads {
  Tensor dx;
  Tensor dh_prev;
  Tensor dc_prev;
};

/// Backward of lstm_step. Accumulates parameter gradients into `grads`.
inline LstmStepGrads lstm_step_backward(const LstmStepCache& cache,
                                        const LstmWeights& w, const Tensor& dh,
                                        const Tensor& dc, LstmGrads& grads) {
  const std::size_t m = w.hidden(), d = w.input_dim();
  LstmStepGrads out{Tensor({d}), Tensor({m}), Tensor({m})};
  const auto dz =
      detail::lstm_cell_backward(cache, w, dh, dc, out.dh_prev, out.dc_prev, grads);
  detail::gemm_nt(1, d, 4 * m, dz.data(), w.Wx.ptr(), out.dx.ptr());
  detail::gemm_tn(d, 4 * m, 1, cache.x.ptr(), dz.data(), grads.dWx.ptr());
  return out;
}

// ---------------------------------------------------------------------------
// bidirectional encoder

struct BiLstmCache {
  std::vector<LstmStepCache> forward;   // indexed by time
  std::vector<LstmStepCache> backward;  // indexed by time
};

/// Runs a forward LSTM over the sequence and a second LSTM over its reverse.
/// Output j is concat(forward state at j, backward state at j).
inline std::vector<Tensor> bilstm_encode(const std::vector<Tensor>& seq,
                                         const LstmWeights& fw,
                                         const LstmWeights& bw,
                                         BiLstmCache* cache = nullptr) {
  if (seq.empty()) throw ContractError("bilstm_encode: empty sequence");
  fw.validate();
  bw.validate();
  const std::size_t T = seq.size(), d = fw.input_dim();
  const std::size_t mf = fw.hidden(), mb = bw.hidden();
  if (bw.input_dim() != d) throw DimensionError("bilstm_encode: input dims differ");
  Tensor X({T, d});
  for (std::size_t t = 0; t < T; ++t) {
    if (seq[t].rank() != 1 || seq[t].dim(0) != d) {
      throw DimensionError("bilstm_encode: element " + std::to_string(t) +
                           " has shape " + shape_string(seq[t].shape()));
    }
    std::copy(seq[t].ptr(), seq[t].ptr() + d, X.ptr() + t * d);
  }
  std::vector<double> zf(T * 4 * mf, 0.0), zb(T * 4 * mb, 0.0);
  detail::gemm_nn(T, 4 * mf, d, X.ptr(), fw.Wx.ptr(), zf.data());
  detail::gemm_nn(T, 4 * mb, d, X.ptr(), bw.Wx.ptr(), zb.data());

  std::vector<Tensor> out(T, Tensor({mf + mb}));
  BiLstmCache local;
  local.forward.resize(T);
  local.backward.resize(T);
  Tensor h({mf}), c({mf});
  for (std::size_t t = 0; t < T; ++t) {
    local.forward[t] = detail::lstm_cell(seq[t], zf.data() + t * 4 * mf, h, c, fw);
    h = detail::cache_h(local.forward[t]);
    c = local.forward[t].c;
    std::copy(h.ptr(), h.ptr() + mf, out[t].ptr());
  }
  h = Tensor({mb});
  c = Tensor({mb});
  for (std::size_t r = 0; r < T; ++r) {
    const std::size_t t = T - 1 - r;
    local.backward[t] = detail::lstm_cell(seq[t], zb.data() + t * 4 * mb, h, c, bw);
    h = detail::cache_h(local.backward[t]);
    c = local.backward[t].c;
    std::copy(h.ptr(), h.ptr() + mb, out[t].ptr() + mf);
  }
  if (cache) *cache = std::move(local);
  return out;
}

/// Backward of bilstm_encode: dstates[j] is dL/d(output j). Returns dL/dseq.
inline std::vector<Tensor> bilstm_backward(const BiLstmCache& cache,
                                           const LstmWeights& fw,
                                           const LstmWeights& bw,
                                           const std::vector<Tensor>& dstates,
                                           LstmGrads& gf, LstmGrads& gb) {
  const std::size_t T = cache.forward.size();
  if (dstates.size() != T) throw DimensionError("bilstm_backward: length mismatch");
  const std::size_t d = fw.input_dim(), mf = fw.hidden(), mb = bw.hidden();
  std::vector<double> dzf(T * 4 * mf), dzb(T * 4 * mb);

  Tensor dh_next({mf}), dc_next({mf}), dh_prev, dc_prev({mf});
  for (std::size_t r = 0; r < T; ++r) {
    const std::size_t t = T - 1 - r;
    Tensor dh({mf});
    for (std::size_t k = 0; k < mf; ++k) dh[k] = dstates[t][k] + dh_next[k];
    auto dz = detail::lstm_cell_backward(cache.forward[t], fw, dh, dc_next,
                                         dh_prev, dc_prev, gf);
    std::copy(dz.begin(), dz.end(), dzf.begin() + t * 4 * mf);
    dh_next = dh_prev;
    dc_next = dc_prev;
  }
  dh_next = Tensor({mb});
  dc_next = Tensor({mb});
  dc_prev = Tensor({mb});
  for (std::size_t t = 0; t < T; ++t) {
    Tensor dh({mb});
    for (std::size_t k = 0; k < mb; ++k) dh[k] = dstates[t][mf + k] + dh_next[k];
    auto dz = detail::lstm_cell_backward(cache.backward[t], bw, dh, dc_next,
                                         dh_prev, dc_prev, gb);
    std::copy(dz.begin(), dz.end(), dzb.begin() + t * 4 * mb);
    dh_next = dh_prev;
    dc_next = dc_prev;
  }

  Tensor X({T, d});
  for (std::size_t t = 0; t < T; ++t) {
    std::copy(cache.forward[t].x.ptr(), cache.forward[t].x.ptr() + d, X.ptr() + t * d);
  }
  detail::gemm_tn(d, 4 * mf, T, X.ptr(), dzf.data(), gf.dWx.ptr());
  detail::gemm_tn(d, 4 * mb, T, X.ptr(), dzb.data(), gb.dWx.ptr());
  Tensor dX({T, d});
  detail::gemm_nt(T, d, 4 * mf, dzf.data(), fw.Wx.ptr(), dX.ptr());
  detail::gemm_nt(T, d, 4 * mb, dzb.data(), bw.Wx.ptr(), dX.ptr());
  std::vector<Tensor> dseq;
  dseq.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    dseq.emplace_back(Shape{d}, std::vector<double>(dX.ptr() + t * d, dX.ptr() + (t + 1) * d));
  }
  return dseq;
}

}  // namespace textspotter::ndops
