// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "textspotter/harness/model.hpp"
#include "textspotter/recognizer/losses.hpp"

namespace textspotter::harness {

/// Where the recognizer's sampling grids come from.
enum class GridSource {
  kGroundTruth,  // annotated word quads
  kDetected,     // best detection with IoU >= match_iou, else the annotated quad
};

struct LossOptions {
  double lambda_align = 0.1;
  double lambda_mask = 0.1;
  bool detection = true;    // l_loc
  bool recognition = true;  // l_word, and l_align / l_mask when enabled below
  bool align = true;
  bool mask = true;
  double shrink = 0.3;
  double score_threshold = 0.8;
  double nms_threshold = 0.3;
  double match_iou = 0.7;
  GridSource grids = GridSource::kGroundTruth;
  text_align::PoolingMode pooling = text_align::PoolingMode::kTextAlign;
};

struct LossTerms {
  double loc = 0.0;
  double word = 0.0;
  double align = 0.0;
  double mask = 0.0;
  double total = 0.0;
  std::size_t words = 0;           // words that went through the recognizer
  std::size_t detected_grids = 0;  // of those, pooled from a detected quad
};

/// Quads the recognizer pools from for each annotated word.
inline std::vector<Quadrilateral> pooling_quads(const std::vector<WordAnnotation>& words,
                                                const std::vector<geometry::ScoredQuad>& dets,
                                                double match_iou, std::size_t* matched) {
  std::vector<Quadrilateral> out;
  for (const auto& w : words) {
    double best = -1.0;
    const Quadrilateral* pick = &w.quad;
    for (const auto& d : dets) {
      const double iou = geometry::quad_iou(d.quad, w.quad);
      if (iou >= match_iou && iou > best) {
        best = iou;
        pick = &d.quad;
      }
    }
    if (best >= 0 && matched) ++*matched;
    out.push_back(*pick);
  }
  return out;
}

/// L = l_loc + l_word + lambda_align * l_align + lambda_mask * l_mask for one
/// sample. Terms that are switched off, or need character annotations the
/// sample lacks (align, mask), contribute 0. When `grads` is given the
/// gradient of L is accumulated into it; both branches reach the backbone
/// through the shared feature map.
inline LossTerms total_loss(const LabeledSample& s, const ParamSet& params,
                            const ModelConfig& cfg, const LossOptions& opt,
                            Gradients* grads) {
  if (opt.lambda_align < 0 || opt.lambda_mask < 0) {
    throw ConfigError("total_loss: loss weights must be >= 0");
  }
  LossTerms out;
  BackboneCache bb_cache;
  const Tensor feat_chw = backbone_forward(s.image, params, cfg, grads ? &bb_cache : nullptr);
  const Tensor feat = ndops::chw_to_hwc(feat_chw);
  const std::size_t h = feat.dim(0), w = feat.dim(1), C = feat.dim(2);
  const Tensor F = feat.reshaped({h * w, C});
  Tensor dF({h * w, C});
  const auto& cs = cfg.rec.charset;

  const bool need_det = opt.detection || (opt.recognition && opt.grids == GridSource::kDetected);
  std::optional<DetectionOutput> det;
  if (need_det) det = detection_heads(feat, params, cfg);
  if (opt.detection) {
    const auto target = detection_target(s.words, h, w, cfg.stride(), opt.shrink);
    const auto dl = detection_loss(*det, target, cfg);
    out.loc = dl.value;
    if (grads) {
      auto gs = ndops::affine_backward(F, params.at("det.score.W"), dl.dscore_logits);
      auto gg = ndops::affine_backward(F, params.at("det.geo.W"), dl.dgeo_raw);
      grads->at("det.score.W") += gs.dW;
      grads->at("det.score.b") += gs.db;
      grads->at("det.geo.W") += gg.dW;
      grads->at("det.geo.b") += gg.db;
      dF += gs.dx;
      dF += gg.dx;
    }
  }

  const bool chars = s.has_char_annotations();
  if (opt.recognition && opt.mask && chars) {
    const Tensor logits = mask_head(feat, params);
    const auto ml = recognizer::mask_loss(logits, char_mask(s, h, w, cfg.stride(), cs));
    out.mask = ml.value;
    if (grads) {
      const Tensor dz = ml.grad.reshaped({h * w, logits.dim(2)});
      auto g = ndops::affine_backward(F, params.at("mask.W"), dz);
      g.dW *= opt.lambda_mask;
      g.db *= opt.lambda_mask;
      g.dx *= opt.lambda_mask;
      grads->at("mask.W") += g.dW;
      grads->at("mask.b") += g.db;
      dF += g.dx;
    }
  }

  if (opt.recognition && !s.words.empty()) {
    std::vector<Quadrilateral> quads;
    if (opt.grids == GridSource::kDetected) {
      const auto dets =
          decode_detections(*det, cfg.stride(), opt.score_threshold, opt.nms_threshold);
      quads = pooling_quads(s.words, dets, opt.match_iou, &out.detected_grids);
    } else {
      for (const auto& word : s.words) quads.push_back(word.quad);
    }
    Tensor dfeat = grads ? Tensor(feat.shape()) : Tensor();
    for (std::size_t wi = 0; wi < s.words.size(); ++wi) {
      const auto& word = s.words[wi];
      bool in_charset = !word.text.empty();
      for (char ch : word.text) in_charset = in_charset && cs.contains(ch);
      if (!in_charset || quads[wi].degenerate()) continue;
      const auto pooled = text_align::pool(opt.pooling, feat, quads[wi], cfg.rec.grid_w,
                                           cfg.rec.grid_h, cfg.spatial_scale());
      const auto targets = cs.encode_with_eos(word.text);
      const auto graph = recognizer::forward_teacher_forced(pooled, targets, params, cfg.rec);
      const auto wl = recognizer::word_loss(graph.logits, targets);
      out.word += wl.value;
      ++out.words;
      std::vector<double> ddelta;
      if (opt.align && chars) {
        const auto ann =
            char_annotations(word, text_align::grid_frame(opt.pooling, quads[wi]), cs);
        const auto deltas = graph.deltas();
        const auto al = recognizer::align_loss(deltas, ann);
        out.align += al.value;
        ddelta = al.grad;
        for (double& v : ddelta) v *= opt.lambda_align;
      }
      if (grads) {
        const Tensor dpooled =
            recognizer::backward_word(graph, wl.grad, ddelta, params, cfg.rec, *grads);
        dfeat += text_align::pool_backward(pooled, dpooled, feat.shape());
      }
    }
    if (grads) dF += dfeat.reshaped({h * w, C});
  }

  out.total = out.loc + out.word + opt.lambda_align * out.align + opt.lambda_mask * out.mask;
  if (grads) {
    backbone_backward(bb_cache, params, cfg, ndops::hwc_to_chw(dF.reshaped({h, w, C})), *grads);
  }
  return out;
}

}  // namespace textspotter::harness
