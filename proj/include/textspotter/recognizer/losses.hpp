// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "textspotter/ndops/ops.hpp"
#include "textspotter/ndops/tensor.hpp"

namespace textspotter::recognizer {

using ndops::Tensor;

/// Ground truth for one character of a word, measured along the word's
/// reading axis in image pixels.
struct CharAnnotation {
  double center = 0.0;  // projection of the character center
  double width = 0.0;   // character extent along the axis, > 0
  std::size_t label = 0;
};

/// Scalar loss together with its gradient with respect to the loss input.
template <typename Grad>
struct LossResult {
  double value = 0.0;
  Grad grad;
};

/// Sum over the annotated characters of ((delta_t - k_t) / (0.5 * width_t))^2.
/// `deltas` are the attention centers of the decode steps; only the first
/// annotations.size() steps contribute. The gradient has deltas.size()
/// entries (zero past the annotated characters).
inline LossResult<std::vector<double>> align_loss(
    std::span<const double> deltas, std::span<const CharAnnotation> annotations) {
  if (deltas.size() < annotations.size()) {
    throw ContractError("align_loss: trace has " + std::to_string(deltas.size()) +
                        " steps for " + std::to_string(annotations.size()) +
                        " annotated characters");
  }
  LossResult<std::vector<double>> r{0.0, std::vector<double>(deltas.size(), 0.0)};
  for (std::size_t t = 0; t < annotations.size(); ++t) {
    const double half = 0.5 * annotations[t].width;
    if (!(half > 0.0)) throw ContractError("align_loss: character width must be > 0");
    const double z = (deltas[t] - annotations[t].center) / half;
    r.value += z * z;
    r.grad[t] = 2.0 * z / half;
  }
  return r;
}

/// Mean per-pixel softmax cross-entropy. logits: [H, W, K+1]; gt: [H, W]
/// holding class indices.
inline LossResult<Tensor> mask_loss(const Tensor& logits, const Tensor& gt) {
  if (logits.rank() != 3 || gt.rank() != 2 || logits.dim(0) != gt.dim(0) ||
      logits.dim(1) != gt.dim(1)) {
    throw DimensionError("mask_loss: logits " + ndops::shape_string(logits.shape()) +
                         " vs labels " + ndops::shape_string(gt.shape()));
  }
  const std::size_t N = gt.size(), K = logits.dim(2);
  LossResult<Tensor> r{0.0, Tensor(logits.shape())};
  const double inv = 1.0 / static_cast<double>(N);
  for (std::size_t p = 0; p < N; ++p) {
    const double lab = gt[p];
    if (!(lab >= 0) || lab >= static_cast<double>(K) || lab != std::floor(lab)) {
      throw ContractError("mask_loss: class index out of range at pixel " +
                          std::to_string(p));
    }
    const auto y = static_cast<std::size_t>(lab);
    const double* z = logits.ptr() + p * K;
    const double lse = ndops::log_sum_exp(z, K);
    r.value += (lse - z[y]) * inv;
    double* d = r.grad.ptr() + p * K;
    for (std::size_t k = 0; k < K; ++k) d[k] = std::exp(z[k] - lse) * inv;
    d[y] -= inv;
  }
  return r;
}

/// Sum over decode steps of the cross-entropy of softmax(logits_t) against
/// the ground-truth label (EOS included).
inline LossResult<std::vector<Tensor>> word_loss(const std::vector<Tensor>& step_logits,
                                                 const std::vector<std::size_t>& gt) {
  if (step_logits.size() != gt.size()) {
    throw ContractError("word_loss: " + std::to_string(step_logits.size()) +
                        " logit vectors for " + std::to_string(gt.size()) + " labels");
  }
  LossResult<std::vector<Tensor>> r{0.0, {}};
  r.grad.reserve(gt.size());
  for (std::size_t t = 0; t < gt.size(); ++t) {
    const Tensor& z = step_logits[t];
    const std::size_t K = z.size();
    if (gt[t] >= K) throw ContractError("word_loss: label out of range");
    const double lse = ndops::log_sum_exp(z.ptr(), K);
    r.value += lse - z[gt[t]];
    Tensor d(z.shape());
    for (std::size_t k = 0; k < K; ++k) d[k] = std::exp(z[k] - lse);
    d[gt[t]] -= 1.0;
    r.grad.push_back(std::move(d));
  }
  return r;
}

}  // namespace textspotter::recognizer
