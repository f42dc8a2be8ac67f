// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "textspotter/harness/objective.hpp"
#include "textspotter/harness/synth.hpp"
#include "textspotter/ndops/grad_check.hpp"
#include "textspotter/ndops/lstm.hpp"
#include "textspotter/ndops/ops.hpp"
#include "textspotter/recognizer/losses.hpp"
#include "textspotter/text_align/sampling.hpp"

namespace textspotter::harness {

struct GradCheckEntry {
  std::string name;
  bool composed = false;  // composed losses use the looser tolerance
  double tolerance = 0.0;
  ndops::GradCheckReport report;
};

struct GradSuiteOptions {
  std::uint64_t seed = 2024;
  std::size_t points = 20;  // probed coordinates per checked input
  double primitive_tol = 1e-6;
  double composed_tol = 1e-5;
  double eps = 1e-5;
  // Deep composed losses use the fourth-order stencil at a larger step.
  double composed_eps = 1e-4;
};

/// Tiny configuration used for whole-model gradient checks.
inline ModelConfig tiny_model_config() {
  ModelConfig m;
  m.backbone = {{3, 2, 1}, {4, 2, 1}, {4, 1, 2}};
  m.max_distance = 48.0;
  m.rec.in_channels = 4;
  m.rec.conv_channels = 3;
  m.rec.hidden = 4;
  m.rec.attention_dim = 3;
  m.rec.embed_dim = 3;
  m.rec.grid_w = 6;
  m.rec.grid_h = 2;
  return m;
}

/// One small synthetic sample that fits the tiny model.
inline LabeledSample tiny_sample(std::uint64_t seed) {
  SynthOptions o;
  o.height = 32;
  o.width = 48;
  o.max_words = 2;
  o.max_scale = 2.5;
  o.vocabulary = {"HI", "A4", "GO", "TAX"};
  return gen_synth_dataset(1, seed, o)[0];
}

namespace detail {

inline Tensor random_tensor(ndops::Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Tensor t(std::move(shape));
  for (double& v : t.storage()) v = u(rng);
  return t;
}

inline double weighted_sum(const Tensor& y, const Tensor& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

inline std::vector<std::size_t> pick_indices(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, n - 1);
  std::vector<std::size_t> idx(k);
  for (auto& i : idx) i = d(rng);
  return idx;
}

// Checks `analytic` = dL/dx for a loss of one tensor argument.
inline ndops::GradCheckReport check_tensor(const std::function<double(const Tensor&)>& loss,
                                           const Tensor& x, const Tensor& analytic,
                                           const GradSuiteOptions& opt, double tol,
                                           std::mt19937_64& rng) {
  ndops::GradCheckOptions g;
  g.eps = opt.eps;
  g.tol = tol;
  const auto shape = x.shape();
  return ndops::grad_check(
      [&](std::span<const double> v) {
        return loss(Tensor(shape, std::vector<double>(v.begin(), v.end())));
      },
      x.data(), analytic.data(), g, pick_indices(x.size(), opt.points, rng));
}

inline void merge(ndops::GradCheckReport& into, const ndops::GradCheckReport& r) {
  if (r.max_rel_error > into.max_rel_error) {
    into.max_rel_error = r.max_rel_error;
    into.worst_index = r.worst_index;
  }
  into.max_abs_error = std::max(into.max_abs_error, r.max_abs_error);
  into.checked += r.checked;
  into.passed = into.passed && r.passed;
}

}  // namespace detail

/// Central-difference checks of every differentiable operation. Each
/// checked input is probed at opt.points seeded coordinates.
inline std::vector<GradCheckEntry> run_gradient_suite(const GradSuiteOptions& opt = {}) {
  using detail::check_tensor;
  using detail::merge;
  using detail::random_tensor;
  using detail::weighted_sum;
  std::mt19937_64 rng(opt.seed);
  std::vector<GradCheckEntry> out;
  const double pt = opt.primitive_tol, ct = opt.composed_tol;

  {  // affine
    GradCheckEntry e{"affine", false, pt, {}};
    const Tensor x = random_tensor({3, 5}, rng), W = random_tensor({5, 4}, rng),
                 b = random_tensor({4}, rng), wy = random_tensor({3, 4}, rng);
    const auto g = ndops::affine_backward(x, W, wy);
    merge(e.report, check_tensor([&](const Tensor& v) { return weighted_sum(ndops::affine(v, W, b), wy); }, x, g.dx, opt, pt, rng));
    merge(e.report, check_tensor([&](const Tensor& v) { return weighted_sum(ndops::affine(x, v, b), wy); }, W, g.dW, opt, pt, rng));
    merge(e.report, check_tensor([&](const Tensor& v) { return weighted_sum(ndops::affine(x, W, v), wy); }, b, g.db, opt, pt, rng));
    out.push_back(e);
  }
  {  // conv2d, strided, padded and dilated
    GradCheckEntry e{"conv2d", false, pt, {}};
    const ndops::ConvGeometry geo{2, 1, 1, 2, 1, 2};
    const Tensor x = random_tensor({2, 7, 8}, rng), k = random_tensor({3, 2, 3, 3}, rng),
                 b = random_tensor({3}, rng);
    const Tensor wy = random_tensor(ndops::conv2d(x, k, geo, &b).shape(), rng);
    const auto g = ndops::conv2d_backward(x, k, geo, wy, true);
    merge(e.report, check_tensor([&](const Tensor& v) { return weighted_sum(ndops::conv2d(v, k, geo, &b), wy); }, x, g.dx, opt, pt, rng));
    merge(e.report, check_tensor([&](const Tensor& v) { return weighted_sum(ndops::conv2d(x, v, geo, &b), wy); }, k, g.dk, opt, pt, rng));
    merge(e.report, check_tensor([&](const Tensor& v) { return weighted_sum(ndops::conv2d(x, k, geo, &v), wy); }, b, g.db, opt, pt, rng));
    out.push_back(e);
  }
  {  // softmax
    GradCheckEntry e{"softmax", false, pt, {}};
    const Tensor x = random_tensor({4, 6}, rng, 2.0), wy = random_tensor({4, 6}, rng);
    const Tensor dx = ndops::softmax_backward(ndops::softmax(x, 1), wy, 1);
    merge(e.report, check_tensor([&](const Tensor& v) { return weighted_sum(ndops::softmax(v, 1), wy); }, x, dx, opt, pt, rng));
    out.push_back(e);
  }
  {  // lstm_step
    GradCheckEntry e{"lstm_step", false, pt, {}};
    const std::size_t d = 3, m = 4;
    Tensor Wx = random_tensor({d, 4 * m}, rng), Wh = random_tensor({m, 4 * m}, rng),
           b = random_tensor({4 * m}, rng);
    const Tensor x = random_tensor({d}, rng), h = random_tensor({m}, rng),
                 c = random_tensor({m}, rng);
    const Tensor wh = random_tensor({m}, rng), wc = random_tensor({m}, rng);
    auto loss = [&](const Tensor& Wx_, const Tensor& Wh_, const Tensor& b_, const Tensor& x_,
                    const Tensor& h_, const Tensor& c_) {
      const auto s = ndops::lstm_step(x_, h_, c_, ndops::LstmWeights{Wx_, Wh_, b_});
      return weighted_sum(s.h, wh) + weighted_sum(s.c, wc);
    };
    ndops::LstmStepCache cache;
    const ndops::LstmWeights w{Wx, Wh, b};
    ndops::lstm_step(x, h, c, w, &cache);
    ndops::LstmGrads lg(w);
    const auto sg = ndops::lstm_step_backward(cache, w, wh, wc, lg);
    ParamSet tmp{{"l.Wx", Wx}, {"l.Wh", Wh}, {"l.b", b}};
    Gradients gg = ndops::zero_gradients(tmp);
    lg.add_to(gg, "l");
    merge(e.report, check_tensor([&](const Tensor& v) { return loss(Wx, Wh, b, v, h, c); }, x, sg.dx, opt, pt, rng));
    merge(e.report, check_tensor([&](const Tensor& v) { return loss(Wx, Wh, b, x, v, c); }, h, sg.dh_prev, opt, pt, rng));
    merge(e.report, check_tensor([&](const Tensor& v) { return loss(Wx, Wh, b, x, h, v); }, c, sg.dc_prev, opt, pt, rng));
    merge(e.report, check_tensor([&](const Tensor& v) { return loss(v, Wh, b, x, h, c); }, Wx, gg.at("l.Wx"), opt, pt, rng));
    merge(e.report, check_tensor([&](const Tensor& v) { return loss(Wx, v, b, x, h, c); }, Wh, gg.at("l.Wh"), opt, pt, rng));
    merge(e.report, check_tensor([&](const Tensor& v) { return loss(Wx, Wh, v, x, h, c); }, b, gg.at("l.b"), opt, pt, rng));
    out.push_back(e);
  }
  {  // bilinear sampling: gradient w.r.t. the feature map
    GradCheckEntry e{"bilinear_sampling", false, pt, {}};
    const Tensor fmap = random_tensor({6, 7, 3}, rng);
    std::uniform_real_distribution<double> ux(-0.5, 6.5), uy(-0.5, 5.5);
    std::vector<geometry::Point> pts;
    std::vector<Tensor> ws;
    for (int i = 0; i < 5; ++i) {
      pts.push_back({ux(rng), uy(rng)});
      ws.push_back(random_tensor({3}, rng));
    }
    Tensor dmap(fmap.shape());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (const auto& cg : text_align::bilinear_backward(ws[i], pts[i], fmap.shape())) {
        for (std::size_t ch = 0; ch < 3; ++ch) dmap.at(cg.row, cg.col, ch) += cg.grad[ch];
      }
    }
    merge(e.report, check_tensor(
                        [&](const Tensor& v) {
                          double s = 0.0;
                          for (std::size_t i = 0; i < pts.size(); ++i) {
                            s += weighted_sum(text_align::bilinear_sample(v, pts[i]), ws[i]);
                          }
                          return s;
                        },
                        fmap, dmap, opt, pt, rng));
    out.push_back(e);
  }
  {  // alignment loss
    GradCheckEntry e{"align_loss", true, ct, {}};
    std::vector<recognizer::CharAnnotation> ann;
    std::uniform_real_distribution<double> u(0.0, 40.0), uw(4.0, 12.0);
    for (int i = 0; i < 5; ++i) ann.push_back({u(rng), uw(rng), 0});
    const Tensor d = random_tensor({6}, rng, 40.0);
    const auto r = recognizer::align_loss(d.data(), ann);
    merge(e.report, check_tensor([&](const Tensor& v) { return recognizer::align_loss(v.data(), ann).value; },
                                 d, Tensor({6}, r.grad), opt, ct, rng));
    out.push_back(e);
  }
  {  // mask loss
    GradCheckEntry e{"mask_loss", true, ct, {}};
    const Tensor z = random_tensor({4, 5, 7}, rng, 2.0);
    Tensor gt({4, 5});
    std::uniform_int_distribution<int> cls(0, 6);
    for (double& v : gt.storage()) v = cls(rng);
    const auto r = recognizer::mask_loss(z, gt);
    merge(e.report, check_tensor([&](const Tensor& v) { return recognizer::mask_loss(v, gt).value; }, z, r.grad, opt, ct, rng));
    out.push_back(e);
  }
  {  // word loss
    GradCheckEntry e{"word_loss", true, ct, {}};
    const Tensor z = random_tensor({5, 9}, rng, 2.0);
    const std::vector<std::size_t> labels{1, 4, 0, 8, 8};
    auto split = [](const Tensor& t) {
      std::vector<Tensor> v;
      for (std::size_t i = 0; i < t.dim(0); ++i) {
        v.emplace_back(ndops::Shape{t.dim(1)},
                       std::vector<double>(t.ptr() + i * t.dim(1), t.ptr() + (i + 1) * t.dim(1)));
      }
      return v;
    };
    const auto r = recognizer::word_loss(split(z), labels);
    Tensor g(z.shape());
    for (std::size_t i = 0; i < r.grad.size(); ++i) {
      std::copy(r.grad[i].ptr(), r.grad[i].ptr() + z.dim(1), g.ptr() + i * z.dim(1));
    }
    merge(e.report, check_tensor([&](const Tensor& v) { return recognizer::word_loss(split(v), labels).value; }, z, g, opt, ct, rng));
    out.push_back(e);
  }
  {  // detection loss w.r.t. head pre-activations
    GradCheckEntry e{"detection_loss", true, ct, {}};
    const ModelConfig m = tiny_model_config();
    const LabeledSample s = tiny_sample(opt.seed);
    const std::size_t h = s.height() / 4, w = s.width() / 4;
    const auto target = detection_target(s.words, h, w, 4, 0.3);
    const Tensor feat = random_tensor({h, w, m.feature_channels()}, rng);
    ParamSet p{{"det.score.W", random_tensor({m.feature_channels(), 2}, rng)},
               {"det.score.b", random_tensor({2}, rng)},
               {"det.geo.W", random_tensor({m.feature_channels(), 5}, rng)},
               {"det.geo.b", random_tensor({5}, rng)}};
    const DetectionOutput base = detection_heads(feat, p, m);
    const auto dl = detection_loss(base, target, m);
    auto with = [&](const Tensor& logits, const Tensor& raw) {
      DetectionOutput o = base;
      o.score_logits = logits;
      o.geo_raw = raw;
      for (std::size_t q = 0; q < h * w; ++q) {
        for (std::size_t k = 0; k < 4; ++k) o.geo_maps[5 * q + k] = m.max_distance * ndops::sigmoid(raw.at(q, k));
        o.geo_maps[5 * q + 4] = (ndops::sigmoid(raw.at(q, 4)) - 0.5) * std::numbers::pi;
      }
      return detection_loss(o, target, m).value;
    };
    // probe geometry at positive cells, where the geometry term lives
    std::vector<std::size_t> pos;
    for (std::size_t q = 0; q < h * w; ++q) {
      if (target.positive[q] > 0) {
        for (std::size_t k = 0; k < 5; ++k) pos.push_back(5 * q + k);
      }
    }
    ndops::GradCheckOptions g;
    g.eps = opt.eps;
    g.tol = ct;
    std::vector<std::size_t> idx;
    std::uniform_int_distribution<std::size_t> pp(0, pos.empty() ? 0 : pos.size() - 1);
    for (std::size_t i = 0; i < opt.points && !pos.empty(); ++i) idx.push_back(pos[pp(rng)]);
    const auto shape = base.geo_raw.shape();
    merge(e.report, ndops::grad_check(
                        [&](std::span<const double> v) {
                          return with(base.score_logits, Tensor(shape, std::vector<double>(v.begin(), v.end())));
                        },
                        base.geo_raw.data(), dl.dgeo_raw.data(), g, idx));
    merge(e.report, check_tensor([&](const Tensor& v) { return with(v, base.geo_raw); },
                                 base.score_logits, dl.dscore_logits, opt, ct, rng));
    out.push_back(e);
  }
  {  // total loss through the whole tiny model, every parameter tensor probed
    GradCheckEntry e{"total_loss", true, ct, {}};
    const ModelConfig m = tiny_model_config();
    const LabeledSample s = tiny_sample(opt.seed + 1);
    ParamSet params = init_model(m, opt.seed);
    // random heads and recognizer: at init most attention gradients sit
    // below the rounding noise of the finite differences
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& [name, t] : params) {
      if (!name.starts_with("bb.")) {
        for (double& v : t.storage()) v = u(rng);
      }
    }
    LossOptions lo;
    Gradients grads = ndops::zero_gradients(params);
    total_loss(s, params, m, lo, &grads);
    ndops::GradCheckOptions g;
    g.eps = opt.composed_eps;
    g.stencil = 4;
    g.tol = ct;
    const std::size_t per = std::max<std::size_t>(1, (opt.points + params.size() - 1) / params.size());
    merge(e.report, ndops::grad_check_params(
                        [&](const ParamSet& p) { return total_loss(s, p, m, lo, nullptr).total; },
                        params, grads, g, std::max<std::size_t>(per, 2), opt.seed));
    out.push_back(e);
  }
  return out;
}

}  // namespace textspotter::harness
