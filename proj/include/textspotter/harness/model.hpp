// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "textspotter/geometry/quad.hpp"
#include "textspotter/harness/sample.hpp"
#include "textspotter/ndops/ops.hpp"
#include "textspotter/ndops/tensor.hpp"
#include "textspotter/recognizer/attention.hpp"
#include "textspotter/text_align/pooling.hpp"

namespace textspotter::harness {

using ndops::Gradients;
using ndops::ParamSet;

/// One 3x3 backbone convolution; padding equals the dilation so stride-1
/// layers keep their resolution.
struct ConvLayer {
  std::size_t out_channels = 32;
  std::size_t stride = 1;
  std::size_t dilation = 1;
};

struct ModelConfig {
  std::vector<ConvLayer> backbone = {{16, 2, 1}, {32, 2, 1}, {32, 1, 1}, {32, 1, 2}, {32, 1, 4}};
  double max_distance = 96.0;  // geometry maps regress distances in (0, max_distance)
  double init_gain = 1.2;
  recognizer::RecognizerConfig rec;

  std::size_t stride() const {
    std::size_t s = 1;
    for (const auto& l : backbone) s *= l.stride;
    return s;
  }
  std::size_t feature_channels() const { return backbone.back().out_channels; }
  double spatial_scale() const { return 1.0 / static_cast<double>(stride()); }

  void validate() const {
    if (backbone.empty()) throw ConfigError("model: empty backbone");
    if (stride() != 4) throw ConfigError("model: backbone stride must be 4");
    if (rec.in_channels != feature_channels()) {
      throw ConfigError("model: recognizer input channels must equal backbone output channels");
    }
    if (!(max_distance > 0)) throw ConfigError("model: max_distance must be > 0");
  }
};

/// Creates every parameter of the model (backbone, detection heads, mask
/// head, recognizer) and initializes it from `seed`: weights uniform with
/// variance gain^2 / fan_in, biases zero, LSTM forget gates biased to 1 and
/// geometry biases set so initial distances are about a tenth of the range.
inline ParamSet init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParamSet p;
  std::size_t cin = 1;
  for (std::size_t i = 0; i < cfg.backbone.size(); ++i) {
    const std::string n = "bb.conv" + std::to_string(i);
    p.emplace(n + ".k", Tensor({cfg.backbone[i].out_channels, cin, 3, 3}));
    p.emplace(n + ".b", Tensor({cfg.backbone[i].out_channels}));
    cin = cfg.backbone[i].out_channels;
  }
  const std::size_t C = cfg.feature_channels();
  p.emplace("det.score.W", Tensor({C, 2}));
  p.emplace("det.score.b", Tensor({2}));
  p.emplace("det.geo.W", Tensor({C, 5}));
  p.emplace("det.geo.b", Tensor({5}));
  p.emplace("mask.W", Tensor({C, cfg.rec.charset.num_mask_classes()}));
  p.emplace("mask.b", Tensor({cfg.rec.charset.num_mask_classes()}));
  recognizer::add_recognizer_params(p, cfg.rec);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (auto& [name, t] : p) {
    const bool bias = name.ends_with(".b");
    if (name == "rec.embed") {
      for (double& v : t.storage()) v = 0.5 * unit(rng);
    } else if (name == "rec.att.v") {
      const double a = std::sqrt(3.0 / static_cast<double>(t.size()));
      for (double& v : t.storage()) v = a * unit(rng);
    } else if (!bias) {
      // conv kernels [F, C, kh, kw] and matrices [in, out]
      const std::size_t fan_in = t.rank() == 4 ? t.size() / t.dim(0) : t.dim(0);
      const double gain = name.starts_with("rec.") && name.ends_with(".Wh") ? 1.0 : cfg.init_gain;
      const double a = gain * std::sqrt(3.0 / static_cast<double>(fan_in));
      for (double& v : t.storage()) v = a * unit(rng);
    }
  }
  for (const char* lstm : {"rec.enc_fw.b", "rec.enc_bw.b", "rec.dec.b"}) {
    Tensor& b = p.at(lstm);
    const std::size_t m = b.size() / 4;
    for (std::size_t k = m; k < 2 * m; ++k) b[k] = 1.0;
  }
  for (std::size_t k = 0; k < 4; ++k) p.at("det.geo.b")[k] = std::log(0.1 / 0.9);
  return p;
}

inline bool is_detection_param(const std::string& name) { return name.starts_with("det."); }

// ---------------------------------------------------------------------------
// backbone

struct BackboneCache {
  std::vector<Tensor> inputs;   // [C,H,W] input of each layer
  std::vector<Tensor> outputs;  // activated output of each layer
};

inline ndops::ConvGeometry backbone_geometry(const ConvLayer& l) {
  return ndops::ConvGeometry::uniform(l.stride, l.dilation, l.dilation);
}

/// image [H,W] -> features [C, H/4, W/4].
inline Tensor backbone_forward(const Tensor& image, const ParamSet& params,
                               const ModelConfig& cfg, BackboneCache* cache = nullptr) {
  if (image.rank() != 2) throw DimensionError("backbone: image must be [H,W]");
  const std::size_t s = cfg.stride();
  if (image.dim(0) % s != 0 || image.dim(1) % s != 0) {
    throw ContractError("backbone: image size " + ndops::shape_string(image.shape()) +
                        " not divisible by " + std::to_string(s));
  }
  Tensor cur = image.reshaped({1, image.dim(0), image.dim(1)});
  for (std::size_t i = 0; i < cfg.backbone.size(); ++i) {
    const std::string n = "bb.conv" + std::to_string(i);
    if (cache) cache->inputs.push_back(cur);
    cur = ndops::elu(ndops::conv2d(cur, params.at(n + ".k"), backbone_geometry(cfg.backbone[i]),
                                   &params.at(n + ".b")));
    if (cache) cache->outputs.push_back(cur);
  }
  return cur;
}

inline void backbone_backward(const BackboneCache& cache, const ParamSet& params,
                              const ModelConfig& cfg, Tensor dfeat, Gradients& grads) {
  for (std::size_t r = 0; r < cfg.backbone.size(); ++r) {
    const std::size_t i = cfg.backbone.size() - 1 - r;
    const std::string n = "bb.conv" + std::to_string(i);
    const Tensor dpre = ndops::elu_backward(cache.outputs[i], dfeat);
    auto g = ndops::conv2d_backward(cache.inputs[i], params.at(n + ".k"),
                                    backbone_geometry(cfg.backbone[i]), dpre, true, i > 0);
    grads.at(n + ".k") += g.dk;
    grads.at(n + ".b") += g.db;
    dfeat = std::move(g.dx);
  }
}

// ---------------------------------------------------------------------------
// detection heads

/// Detection branch output at 1/4 resolution. Anchor of cell (i, j) is the
/// image point (4j + 1.5, 4i + 1.5), the center of its 4x4 pixel block.
struct DetectionOutput {
  Tensor score_map;     // [h, w] text probability
  Tensor geo_maps;      // [h, w, 5]: top, bottom, left, right, angle
  Tensor score_logits;  // [h*w, 2] (non-text, text)
  Tensor geo_raw;       // [h*w, 5] pre-activation geometry

  std::size_t height() const { return score_map.dim(0); }
  std::size_t width() const { return score_map.dim(1); }
};

inline Point cell_anchor(std::size_t i, std::size_t j, std::size_t stride) {
  const double off = 0.5 * static_cast<double>(stride) - 0.5;
  return {static_cast<double>(j * stride) + off, static_cast<double>(i * stride) + off};
}

/// features_hwc viewed as [h*w, C].
inline DetectionOutput detection_heads(const Tensor& feat_hwc, const ParamSet& params,
                                       const ModelConfig& cfg) {
  const std::size_t h = feat_hwc.dim(0), w = feat_hwc.dim(1), C = feat_hwc.dim(2);
  const Tensor F = feat_hwc.reshaped({h * w, C});
  DetectionOutput out;
  out.score_logits = ndops::affine(F, params.at("det.score.W"), params.at("det.score.b"));
  out.geo_raw = ndops::affine(F, params.at("det.geo.W"), params.at("det.geo.b"));
  out.score_map = Tensor({h, w});
  out.geo_maps = Tensor({h, w, 5});
  const Tensor prob = ndops::softmax(out.score_logits, 1);
  for (std::size_t p = 0; p < h * w; ++p) {
    out.score_map[p] = prob.at(p, 1);
    for (std::size_t k = 0; k < 4; ++k) {
      out.geo_maps[p * 5 + k] = cfg.max_distance * ndops::sigmoid(out.geo_raw.at(p, k));
    }
    out.geo_maps[p * 5 + 4] = (ndops::sigmoid(out.geo_raw.at(p, 4)) - 0.5) * std::numbers::pi;
  }
  return out;
}

/// Backbone plus detection heads on one image.
inline DetectionOutput detect_forward(const Tensor& image, const ParamSet& params,
                                      const ModelConfig& cfg) {
  const Tensor feat = ndops::chw_to_hwc(backbone_forward(image, params, cfg));
  return detection_heads(feat, params, cfg);
}

/// Mask logits [h, w, K+1] from features [h, w, C].
inline Tensor mask_head(const Tensor& feat_hwc, const ParamSet& params) {
  const std::size_t h = feat_hwc.dim(0), w = feat_hwc.dim(1), C = feat_hwc.dim(2);
  const Tensor z = ndops::affine(feat_hwc.reshaped({h * w, C}), params.at("mask.W"),
                                 params.at("mask.b"));
  return z.reshaped({h, w, z.dim(1)});
}

// ---------------------------------------------------------------------------
// detection ground truth and loss

/// Per-cell targets: a cell is positive when its anchor lies inside a word
/// quad at least shrink * r from every side, r being the quad's shorter side.
struct DetectionTarget {
  Tensor positive;  // [h, w] 0/1
  Tensor geo;       // [h, w, 5] target RBox of positive cells
  std::size_t num_positive = 0;
};

/// Distances from p to the lines through the quad's top, bottom, left and
/// right sides, positive inside.
inline std::array<double, 4> side_distances(const Quadrilateral& q, Point p) {
  auto d = [&](std::size_t a, std::size_t b) {
    const Point e = q[b] - q[a];
    return geometry::cross(e, p - q[a]) / geometry::norm(e);
  };
  // y points down, so for clockwise-on-screen corners the interior is on the
  // positive-cross side of every edge
  return {d(0, 1), d(2, 3), d(3, 0), d(1, 2)};
}

inline DetectionTarget detection_target(const std::vector<WordAnnotation>& words, std::size_t h,
                                        std::size_t w, std::size_t stride, double shrink) {
  DetectionTarget t{Tensor({h, w}), Tensor({h, w, 5}), 0};
  for (const auto& word : words) {
    const Quadrilateral& q = word.quad;
    if (q.degenerate()) continue;
    const double len_w = 0.5 * (geometry::norm(q[1] - q[0]) + geometry::norm(q[2] - q[3]));
    const double len_h = 0.5 * (geometry::norm(q[3] - q[0]) + geometry::norm(q[2] - q[1]));
    const double margin = shrink * std::min(len_w, len_h);
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        if (t.positive.at(i, j) > 0) continue;
        const auto d = side_distances(q, cell_anchor(i, j, stride));
        if (std::min({d[0], d[1], d[2], d[3]}) < margin || margin <= 0) continue;
        t.positive.at(i, j) = 1.0;
        ++t.num_positive;
        double* g = t.geo.ptr() + (i * w + j) * 5;
        for (std::size_t k = 0; k < 4; ++k) g[k] = d[k];
        g[4] = q.angle();
      }
    }
  }
  return t;
}

struct DetectionLoss {
  double value = 0.0;
  double classification = 0.0;
  double geometry = 0.0;
  Tensor dscore_logits;  // [h*w, 2]
  Tensor dgeo_raw;       // [h*w, 5]
};

/// Classification: mean softmax cross-entropy over all cells. Geometry, mean
/// over positive cells: -log IoU of the distance boxes plus 1 - cos of the
/// angle error. The two terms are summed.
inline DetectionLoss detection_loss(const DetectionOutput& out, const DetectionTarget& gt,
                                    const ModelConfig& cfg) {
  const std::size_t h = out.height(), w = out.width(), N = h * w;
  if (gt.positive.shape() != ndops::Shape{h, w}) {
    throw DimensionError("detection_loss: target shape mismatch");
  }
  DetectionLoss L{0, 0, 0, Tensor({N, 2}), Tensor({N, 5})};
  const double invN = 1.0 / static_cast<double>(N);
  for (std::size_t p = 0; p < N; ++p) {
    const double* z = out.score_logits.ptr() + 2 * p;
    const std::size_t y = gt.positive[p] > 0 ? 1 : 0;
    const double lse = ndops::log_sum_exp(z, 2);
    L.classification += (lse - z[y]) * invN;
    for (std::size_t k = 0; k < 2; ++k) L.dscore_logits[2 * p + k] = std::exp(z[k] - lse) * invN;
    L.dscore_logits[2 * p + y] -= invN;
  }
  if (gt.num_positive > 0) {
    const double invP = 1.0 / static_cast<double>(gt.num_positive);
    for (std::size_t p = 0; p < N; ++p) {
      if (gt.positive[p] <= 0) continue;
      const double* pr = out.geo_maps.ptr() + 5 * p;
      const double* g = gt.geo.ptr() + 5 * p;
      const double t = pr[0], b = pr[1], l = pr[2], r = pr[3];
      const double area_p = (t + b) * (l + r), area_g = (g[0] + g[1]) * (g[2] + g[3]);
      const double wi = std::min(l, g[2]) + std::min(r, g[3]);
      const double hi = std::min(t, g[0]) + std::min(b, g[1]);
      const double inter = wi * hi, uni = area_p + area_g - inter;
      const double dtheta = pr[4] - g[4];
      L.geometry += (std::log(uni) - std::log(inter) + 1.0 - std::cos(dtheta)) * invP;
      // d/d(inter) and d/d(area_p) of log(U) - log(I)
      const double dI = (-1.0 / uni - 1.0 / inter) * invP, dA = invP / uni;
      const double dd[4] = {
          dI * (t < g[0] ? wi : 0.0) + dA * (l + r), dI * (b < g[1] ? wi : 0.0) + dA * (l + r),
          dI * (l < g[2] ? hi : 0.0) + dA * (t + b), dI * (r < g[3] ? hi : 0.0) + dA * (t + b)};
      for (std::size_t k = 0; k < 4; ++k) {
        // distance = D * sigmoid(z): dd/dz = d * (1 - d / D)
        L.dgeo_raw[5 * p + k] = dd[k] * pr[k] * (1.0 - pr[k] / cfg.max_distance);
      }
      const double s = pr[4] / std::numbers::pi + 0.5;
      L.dgeo_raw[5 * p + 4] = std::sin(dtheta) * invP * std::numbers::pi * s * (1.0 - s);
    }
  }
  L.value = L.classification + L.geometry;
  return L;
}

// ---------------------------------------------------------------------------
// inference

/// Cells scoring above `score_threshold` decode to quads, followed by NMS.
inline std::vector<geometry::ScoredQuad> decode_detections(const DetectionOutput& out,
                                                           std::size_t stride,
                                                           double score_threshold,
                                                           double nms_threshold) {
  std::vector<geometry::ScoredQuad> boxes;
  for (std::size_t i = 0; i < out.height(); ++i) {
    for (std::size_t j = 0; j < out.width(); ++j) {
      const double s = out.score_map.at(i, j);
      if (!(s > score_threshold)) continue;
      const double* g = out.geo_maps.ptr() + (i * out.width() + j) * 5;
      geometry::RBox r{cell_anchor(i, j, stride), g[0], g[1], g[2], g[3], g[4]};
      if (!r.valid()) continue;
      const Quadrilateral q = geometry::decode_rbox(r);
      if (q.degenerate()) continue;
      boxes.push_back({q, s});
    }
  }
  return geometry::nms(std::move(boxes), nms_threshold);
}

/// Greedy transcription of one region of a feature map [h, w, C].
inline recognizer::GreedyResult recognize_region(const Tensor& feat_hwc, const Quadrilateral& q,
                                                 const ParamSet& params, const ModelConfig& cfg,
                                                 text_align::PoolingMode mode,
                                                 std::size_t max_len = 16) {
  const auto pooled =
      text_align::pool(mode, feat_hwc, q, cfg.rec.grid_w, cfg.rec.grid_h, cfg.spatial_scale());
  const auto enc = recognizer::encode_sequence(pooled, params, cfg.rec);
  return recognizer::decode_greedy(enc, params, cfg.rec, max_len);
}

}  // namespace textspotter::harness
