// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//
// Sub-losses of the training objective recomputed one at a time, for checking
// total_loss against their weighted sum.

#pragma once

#include <cmath>
#include <numbers>

#include "textspotter/harness/objective.hpp"

namespace oracle {

// -log IoU of the distance boxes plus 1 - cos of the angle error, averaged
// over positive cells; written out per cell without the library's backward.
inline double detection_geometry(const textspotter::ndops::Tensor& geo_maps,
                                 const textspotter::harness::DetectionTarget& t) {
  if (t.num_positive == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t p = 0; p < t.positive.size(); ++p) {
    if (t.positive[p] <= 0) continue;
    const double* a = geo_maps.ptr() + 5 * p;
    const double* g = t.geo.ptr() + 5 * p;
    const double box_a = (a[0] + a[1]) * (a[2] + a[3]);
    const double box_g = (g[0] + g[1]) * (g[2] + g[3]);
    const double iw = std::min(a[2], g[2]) + std::min(a[3], g[3]);
    const double ih = std::min(a[0], g[0]) + std::min(a[1], g[1]);
    const double inter = iw * ih;
    sum += -std::log(inter / (box_a + box_g - inter)) + 1.0 - std::cos(a[4] - g[4]);
  }
  return sum / static_cast<double>(t.num_positive);
}

inline double detection_classification(const textspotter::ndops::Tensor& score_logits,
                                       const textspotter::harness::DetectionTarget& t) {
  double sum = 0.0;
  const std::size_t n = t.positive.size();
  for (std::size_t p = 0; p < n; ++p) {
    const double z0 = score_logits[2 * p], z1 = score_logits[2 * p + 1];
    const double pt = 1.0 / (1.0 + std::exp((t.positive[p] > 0 ? z0 - z1 : z1 - z0)));
    sum -= std::log(pt);
  }
  return sum / static_cast<double>(n);
}

struct SubLosses {
  double loc = 0.0, word = 0.0, align = 0.0, mask = 0.0;
};

// Ground-truth grids only.
inline SubLosses sub_losses(const textspotter::harness::LabeledSample& s,
                            const textspotter::ndops::ParamSet& params,
                            const textspotter::harness::ModelConfig& cfg,
                            const textspotter::harness::LossOptions& opt) {
  namespace h = textspotter::harness;
  namespace rc = textspotter::recognizer;
  namespace ta = textspotter::text_align;
  SubLosses out;
  const auto feat = textspotter::ndops::chw_to_hwc(h::backbone_forward(s.image, params, cfg));
  const std::size_t fh = feat.dim(0), fw = feat.dim(1);
  if (opt.detection) {
    const auto det = h::detection_heads(feat, params, cfg);
    const auto target = h::detection_target(s.words, fh, fw, cfg.stride(), opt.shrink);
    out.loc = detection_classification(det.score_logits, target) +
              detection_geometry(det.geo_maps, target);
  }
  if (!opt.recognition) return out;
  const bool chars = s.has_char_annotations();
  if (opt.mask && chars) {
    const auto gt = h::char_mask(s, fh, fw, cfg.stride(), cfg.rec.charset);
    out.mask = rc::mask_loss(h::mask_head(feat, params), gt).value;
  }
  for (const auto& word : s.words) {
    const auto pooled = ta::pool(opt.pooling, feat, word.quad, cfg.rec.grid_w, cfg.rec.grid_h,
                                 cfg.spatial_scale());
    const auto targets = cfg.rec.charset.encode_with_eos(word.text);
    const auto g = rc::forward_teacher_forced(pooled, targets, params, cfg.rec);
    out.word += rc::word_loss(g.logits, targets).value;
    if (opt.align && chars) {
      const auto ann =
          h::char_annotations(word, ta::grid_frame(opt.pooling, word.quad), cfg.rec.charset);
      out.align += rc::align_loss(g.deltas(), ann).value;
    }
  }
  return out;
}

}  // namespace oracle
