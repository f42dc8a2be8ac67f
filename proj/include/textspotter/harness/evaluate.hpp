// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "textspotter/evalkit/match.hpp"
#include "textspotter/harness/config.hpp"
#include "textspotter/harness/model.hpp"

namespace textspotter::harness {

struct ImagePrediction {
  std::vector<evalkit::TextPrediction> words;
};

/// Detection, NMS, then greedy recognition of every kept box.
inline ImagePrediction spot_image(const Tensor& image, const ParamSet& params,
                                  const TrainConfig& cfg, bool recognize = true) {
  const ModelConfig m = cfg.model();
  const Tensor feat = ndops::chw_to_hwc(backbone_forward(image, params, m));
  const DetectionOutput det = detection_heads(feat, params, m);
  ImagePrediction out;
  for (const auto& box :
       decode_detections(det, m.stride(), cfg.score_threshold, cfg.nms_threshold)) {
    std::string text;
    if (recognize) {
      text = recognize_region(feat, box.quad, params, m, cfg.pooling, cfg.max_decode_len).text;
    }
    out.words.push_back({box, text});
  }
  return out;
}

inline std::vector<ImagePrediction> spot_dataset(const std::vector<LabeledSample>& data,
                                                 const ParamSet& params, const TrainConfig& cfg,
                                                 bool recognize = true) {
  std::vector<ImagePrediction> out;
  out.reserve(data.size());
  for (const auto& s : data) out.push_back(spot_image(s.image, params, cfg, recognize));
  return out;
}

inline std::vector<evalkit::TextTruth> truths(const LabeledSample& s) {
  std::vector<evalkit::TextTruth> t;
  for (const auto& w : s.words) t.push_back({w.quad, w.text});
  return t;
}

/// Detection counts summed over images.
inline evalkit::MatchResult detection_metrics(const std::vector<LabeledSample>& data,
                                              const std::vector<ImagePrediction>& preds) {
  evalkit::MatchResult r;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<geometry::ScoredQuad> boxes;
    for (const auto& p : preds[i].words) boxes.push_back(p.box);
    std::vector<Quadrilateral> gts;
    for (const auto& w : data[i].words) gts.push_back(w.quad);
    r += evalkit::eval_detection(boxes, gts);
  }
  return r;
}

inline evalkit::MatchResult end_to_end_metrics(const std::vector<LabeledSample>& data,
                                               const std::vector<ImagePrediction>& preds,
                                               const std::vector<evalkit::Lexicon>& lexicons,
                                               evalkit::Protocol protocol) {
  evalkit::MatchResult r;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const evalkit::Lexicon& lex = lexicons.size() == 1 ? lexicons[0] : lexicons.at(i);
    r += evalkit::eval_end_to_end(preds[i].words, truths(data[i]), lex, protocol);
  }
  return r;
}

struct WordAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double value() const {
    return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  }
};

/// Recognition accuracy with ground-truth boxes: exact transcript match.
inline WordAccuracy gt_word_accuracy(const std::vector<LabeledSample>& data,
                                     const ParamSet& params, const TrainConfig& cfg) {
  const ModelConfig m = cfg.model();
  WordAccuracy acc;
  for (const auto& s : data) {
    const Tensor feat = ndops::chw_to_hwc(backbone_forward(s.image, params, m));
    for (const auto& w : s.words) {
      const auto r = recognize_region(feat, w.quad, params, m, cfg.pooling, cfg.max_decode_len);
      acc.correct += r.text == w.text;
      ++acc.total;
    }
  }
  return acc;
}

}  // namespace textspotter::harness
