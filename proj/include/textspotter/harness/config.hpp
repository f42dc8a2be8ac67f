// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "textspotter/harness/augment.hpp"
#include "textspotter/harness/model.hpp"
#include "textspotter/harness/objective.hpp"

namespace textspotter::harness {

/// Every tunable constant of a training run. Serialized as flat
/// `key = value` text, one key per field.
struct TrainConfig {
  std::uint64_t seed = 7;

  // curriculum
  std::size_t stage1_iters = 8000;
  std::size_t stage2a_iters = 8000;
  std::size_t stage2b_iters = 1000;
  std::size_t stage3_iters = 500;
  double lr_stage1 = 5e-4;
  double lr_stage2 = 5e-4;
  std::size_t batch_size = 1;
  std::size_t stage3_batch_size = 4;
  std::size_t stage3_synthetic_per_batch = 1;

  // objective
  double lambda_align = 0.1;
  double lambda_mask = 0.1;
  bool detection = true;
  bool recognition = true;
  bool align_loss = true;
  bool mask_loss = true;
  double shrink = 0.3;
  double match_iou = 0.7;

  // inference
  double score_threshold = 0.8;
  double nms_threshold = 0.3;
  std::size_t max_decode_len = 16;

  // model
  std::vector<ConvLayer> backbone = ModelConfig{}.backbone;
  double max_distance = 96.0;
  double init_gain = 1.2;
  text_align::PoolingMode pooling = text_align::PoolingMode::kTextAlign;
  bool position_embedding = true;
  std::size_t grid_w = 32;
  std::size_t grid_h = 4;
  std::size_t hidden = 64;
  std::size_t attention_dim = 32;
  std::size_t embed_dim = 16;
  std::size_t conv_channels = 32;

  // optimizer
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 5.0;  // global-norm clip; 0 disables

  // augmentation for the stage-3 external samples
  double aug_max_rotation_deg = 20.0;
  double aug_min_scale = 1.0;
  double aug_max_scale = 1.25;
  double aug_max_shift = 8.0;
  std::size_t crop_h = 96;
  std::size_t crop_w = 96;

  ModelConfig model() const {
    ModelConfig m;
    m.backbone = backbone;
    m.max_distance = max_distance;
    m.init_gain = init_gain;
    m.rec.in_channels = backbone.empty() ? 0 : backbone.back().out_channels;
    m.rec.conv_channels = conv_channels;
    m.rec.hidden = hidden;
    m.rec.attention_dim = attention_dim;
    m.rec.embed_dim = embed_dim;
    m.rec.grid_w = grid_w;
    m.rec.grid_h = grid_h;
    m.rec.position_embedding = position_embedding;
    return m;
  }

  LossOptions loss_options() const {
    LossOptions o;
    o.lambda_align = lambda_align;
    o.lambda_mask = lambda_mask;
    o.detection = detection;
    o.recognition = recognition;
    o.align = align_loss;
    o.mask = mask_loss;
    o.shrink = shrink;
    o.score_threshold = score_threshold;
    o.nms_threshold = nms_threshold;
    o.match_iou = match_iou;
    o.pooling = pooling;
    return o;
  }

  AugmentOptions augment_options() const {
    return {aug_max_rotation_deg, aug_min_scale, aug_max_scale, aug_max_shift, crop_h, crop_w};
  }

  void validate() const {
    if (lambda_align < 0 || lambda_mask < 0) throw ConfigError("lambda weights must be >= 0");
    if (!(lr_stage1 > 0) || !(lr_stage2 > 0)) throw ConfigError("learning rates must be > 0");
    if (batch_size < 1 || stage3_batch_size < 1) throw ConfigError("batch sizes must be >= 1");
    if (stage3_synthetic_per_batch > stage3_batch_size) {
      throw ConfigError("stage3_synthetic_per_batch exceeds stage3_batch_size");
    }
    if (!(score_threshold >= 0 && score_threshold < 1)) {
      throw ConfigError("score_threshold must lie in [0, 1)");
    }
    if (!(nms_threshold > 0 && nms_threshold < 1)) throw ConfigError("nms_threshold must lie in (0, 1)");
    if (!detection && !recognition) throw ConfigError("detection and recognition both disabled");
    model().validate();
  }

  template <typename Visitor>
  void visit(Visitor&& v) {
    v("seed", seed);
    v("stage1_iters", stage1_iters);
    v("stage2a_iters", stage2a_iters);
    v("stage2b_iters", stage2b_iters);
    v("stage3_iters", stage3_iters);
    v("lr_stage1", lr_stage1);
    v("lr_stage2", lr_stage2);
    v("batch_size", batch_size);
    v("stage3_batch_size", stage3_batch_size);
    v("stage3_synthetic_per_batch", stage3_synthetic_per_batch);
    v("lambda_align", lambda_align);
    v("lambda_mask", lambda_mask);
    v("detection", detection);
    v("recognition", recognition);
    v("align_loss", align_loss);
    v("mask_loss", mask_loss);
    v("shrink", shrink);
    v("match_iou", match_iou);
    v("score_threshold", score_threshold);
    v("nms_threshold", nms_threshold);
    v("max_decode_len", max_decode_len);
    v("backbone", backbone);
    v("max_distance", max_distance);
    v("init_gain", init_gain);
    v("pooling", pooling);
    v("position_embedding", position_embedding);
    v("grid_w", grid_w);
    v("grid_h", grid_h);
    v("hidden", hidden);
    v("attention_dim", attention_dim);
    v("embed_dim", embed_dim);
    v("conv_channels", conv_channels);
    v("adam_beta1", adam_beta1);
    v("adam_beta2", adam_beta2);
    v("adam_eps", adam_eps);
    v("grad_clip", grad_clip);
    v("aug_max_rotation_deg", aug_max_rotation_deg);
    v("aug_min_scale", aug_min_scale);
    v("aug_max_scale", aug_max_scale);
    v("aug_max_shift", aug_max_shift);
    v("crop_h", crop_h);
    v("crop_w", crop_w);
  }
};

namespace detail {

template <typename T>
std::string format_value(const std::string&, const T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_same_v<T, double>) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  } else if constexpr (std::is_same_v<T, text_align::PoolingMode>) {
    return text_align::pooling_mode_name(v);
  } else if constexpr (std::is_same_v<T, std::vector<ConvLayer>>) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(v[i].out_channels) + '/' + std::to_string(v[i].stride) + '/' +
           std::to_string(v[i].dilation);
    }
    return s;
  } else {
    return std::to_string(v);
  }
}

inline std::vector<ConvLayer> parse_backbone(const std::string& text) {
  std::vector<ConvLayer> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    ConvLayer l;
    char s1 = 0, s2 = 0;
    std::stringstream is(item);
    if (!(is >> l.out_channels >> s1 >> l.stride >> s2 >> l.dilation) || s1 != '/' || s2 != '/' ||
        l.out_channels == 0 || l.stride == 0 || l.dilation == 0) {
      throw ConfigError("backbone layer must be channels/stride/dilation, got '" + item + "'");
    }
    out.push_back(l);
  }
  if (out.empty()) throw ConfigError("backbone: no layers");
  return out;
}

template <typename T>
void parse_value(const std::string& key, const std::string& text, T& v) {
  try {
    std::size_t used = 0;
    if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1") {
        v = true;
      } else if (text == "false" || text == "0") {
        v = false;
      } else {
        throw ConfigError("expected true/false");
      }
      return;
    } else if constexpr (std::is_same_v<T, double>) {
      v = std::stod(text, &used);
    } else if constexpr (std::is_same_v<T, text_align::PoolingMode>) {
      v = text_align::parse_pooling_mode(text);
      return;
    } else if constexpr (std::is_same_v<T, std::vector<ConvLayer>>) {
      v = parse_backbone(text);
      return;
    } else {
      if (!text.empty() && text[0] == '-') throw ConfigError("expected a nonnegative integer");
      v = static_cast<T>(std::stoull(text, &used));
    }
    if (used != text.size()) throw ConfigError("trailing characters");
  } catch (const std::logic_error&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  } catch (const ConfigError& e) {
    throw ConfigError("config key '" + key + "': " + e.what() + " (got '" + text + "')");
  }
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline std::string config_to_text(TrainConfig cfg) {
  std::string out;
  cfg.visit([&](const char* key, auto& v) {
    out += key;
    out += " = ";
    out += detail::format_value(key, v);
    out += '\n';
  });
  return out;
}

/// Applies `key = value` lines on top of `base`. Blank lines and lines
/// starting with '#' are ignored; unknown keys are errors.
inline TrainConfig parse_config(const std::string& text, TrainConfig base = {}) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  base.visit([&](const char* key, auto& v) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    detail::parse_value(key, it->second, v);
    kv.erase(it);
  });
  if (!kv.empty()) throw ConfigError("unknown config key '" + kv.begin()->first + "'");
  base.validate();
  return base;
}

inline TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {}) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

}  // namespace textspotter::harness
