// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "textspotter/harness/font.hpp"
#include "textspotter/harness/sample.hpp"

namespace textspotter::harness {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SynthOptions {
  std::size_t height = 96;
  std::size_t width = 96;
  std::size_t min_words = 1;
  std::size_t max_words = 3;
  double min_scale = 2.0;
  double max_scale = 4.0;
  double max_rotation_deg = 20.0;
  double border = 1.0;             // keep word quads this far inside the canvas
  std::size_t placement_tries = 60;
  std::vector<std::string> vocabulary = builtin_vocabulary();
};

namespace detail {

// Word quad in word-local coordinates (x along the text, y down, origin at
// the first glyph's top-left corner) has a one-font-pixel margin.
struct WordLayout {
  std::string text;
  double scale = 0.0;
  double angle = 0.0;
  Point center;  // image position of the glyph block's center

  double glyph_w() const {
    return (static_cast<double>(text.size() * kGlyphAdvance) - 1.0) * scale;
  }
  double glyph_h() const { return static_cast<double>(kGlyphHeight) * scale; }

  Point to_image(Point local) const {
    const Point c{0.5 * glyph_w(), 0.5 * glyph_h()};
    return center + geometry::rotate(local - c, angle);
  }
  Point to_local(Point img) const {
    const Point c{0.5 * glyph_w(), 0.5 * glyph_h()};
    return c + geometry::rotate(img - center, -angle);
  }
  Quadrilateral quad_of(double x0, double y0, double x1, double y1) const {
    return Quadrilateral(to_image({x0, y0}), to_image({x1, y0}), to_image({x1, y1}),
                         to_image({x0, y1}));
  }
  Quadrilateral word_quad() const {
    return quad_of(-scale, -scale, glyph_w() + scale, glyph_h() + scale);
  }
  // Half extents of the rotated word quad's bounding box.
  Point half_extent(double s, double a) const {
    const double w = (static_cast<double>(text.size() * kGlyphAdvance) + 1.0) * s;
    const double h = (static_cast<double>(kGlyphHeight) + 2.0) * s;
    const double c = std::abs(std::cos(a)), n = std::abs(std::sin(a));
    return {0.5 * (w * c + h * n), 0.5 * (w * n + h * c)};
  }

  bool ink(Point local) const {
    if (local.x < 0.0 || local.y < 0.0) return false;
    const auto fx = static_cast<std::size_t>(local.x / scale);
    const auto fy = static_cast<std::size_t>(local.y / scale);
    if (fy >= kGlyphHeight) return false;
    const std::size_t k = fx / kGlyphAdvance, col = fx % kGlyphAdvance;
    if (k >= text.size() || col >= kGlyphWidth) return false;
    return glyph_pixel(text[k], fy, col);
  }

  WordAnnotation annotation() const {
    WordAnnotation w{word_quad(), text, {}};
    for (std::size_t k = 0; k < text.size(); ++k) {
      const double x0 = static_cast<double>(k * kGlyphAdvance) * scale;
      const double x1 = x0 + static_cast<double>(kGlyphWidth) * scale;
      CharBox c;
      c.quad = quad_of(x0, 0.0, x1, glyph_h());
      c.label = text[k];
      c.center = to_image({0.5 * (x0 + x1), 0.5 * glyph_h()});
      c.width = static_cast<double>(kGlyphWidth) * scale;
      w.chars.push_back(c);
    }
    return w;
  }
};

inline double quantize(double v) {
  return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
}

}  // namespace detail

/// Renders one sample from `rng`: a noisy dark background with a smooth
/// gradient and 1 to max_words non-overlapping light words.
inline LabeledSample render_synth_sample(std::mt19937_64& rng, const SynthOptions& opt,
                                         std::string id) {
  const double H = static_cast<double>(opt.height), W = static_cast<double>(opt.width);
  std::vector<std::string> fitting;
  for (const auto& w : opt.vocabulary) {
    detail::WordLayout probe{w, opt.min_scale, 0.0, {}};
    const Point e = probe.half_extent(opt.min_scale, 0.0);
    if (2.0 * (e.x + opt.border) <= W && 2.0 * (e.y + opt.border) <= H) fitting.push_back(w);
  }
  if (fitting.empty()) {
    throw GenerationError("canvas " + std::to_string(opt.height) + "x" +
                          std::to_string(opt.width) + " too small for any vocabulary word");
  }
  std::uniform_int_distribution<std::size_t> n_words(opt.min_words, opt.max_words);
  std::uniform_int_distribution<std::size_t> pick(0, fitting.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double max_rot = opt.max_rotation_deg * std::numbers::pi / 180.0;

  std::vector<detail::WordLayout> placed;
  const std::size_t want = n_words(rng);
  for (std::size_t n = 0; n < want; ++n) {
    const std::string text = fitting[pick(rng)];
    for (std::size_t attempt = 0; attempt < opt.placement_tries; ++attempt) {
      detail::WordLayout L{text, 0.0, (2.0 * unit(rng) - 1.0) * max_rot, {}};
      // largest scale whose rotated box still fits, capped at max_scale
      const Point e1 = L.half_extent(1.0, L.angle);
      const double fit = std::min((0.5 * W - opt.border) / e1.x, (0.5 * H - opt.border) / e1.y);
      const double hi = std::min(opt.max_scale, fit);
      const double u_scale = unit(rng), u_x = unit(rng), u_y = unit(rng);
      if (hi < opt.min_scale) continue;
      L.scale = opt.min_scale + u_scale * (hi - opt.min_scale);
      const Point e = L.half_extent(L.scale, L.angle);
      const double cx = opt.border + e.x + u_x * (W - 2.0 * (e.x + opt.border));
      const double cy = opt.border + e.y + u_y * (H - 2.0 * (e.y + opt.border));
      // (cx, cy) centers the word quad, which is symmetric about the glyph block
      L.center = {cx - 0.5, cy - 0.5};
      const Quadrilateral q = L.word_quad();
      bool clash = false;
      for (const auto& other : placed) {
        if (geometry::intersection_area(q, other.word_quad()) > 0.0) clash = true;
      }
      if (!clash) {
        placed.push_back(L);
        break;
      }
    }
  }
  if (placed.empty()) throw GenerationError("no word could be placed on the canvas");

  LabeledSample s;
  s.id = std::move(id);
  s.source = Source::kSynthetic;
  s.image = Tensor({opt.height, opt.width});
  const double base = 0.05 + 0.3 * unit(rng);
  const double gx = (unit(rng) - 0.5) * 0.2, gy = (unit(rng) - 0.5) * 0.2;
  std::vector<double> ink_level;
  for (std::size_t k = 0; k < placed.size(); ++k) {
    ink_level.push_back(std::min(1.0, base + 0.4 + unit(rng) * 0.5));
  }
  std::normal_distribution<double> noise(0.0, 0.03);
  constexpr int kSub = 3;
  for (std::size_t i = 0; i < opt.height; ++i) {
    for (std::size_t j = 0; j < opt.width; ++j) {
      double v = base + gx * (static_cast<double>(j) / W - 0.5) +
                 gy * (static_cast<double>(i) / H - 0.5);
      for (std::size_t k = 0; k < placed.size(); ++k) {
        int hits = 0;
        for (int a = 0; a < kSub; ++a) {
          for (int b = 0; b < kSub; ++b) {
            const Point p{static_cast<double>(j) + (b - 1) / 3.0,
                          static_cast<double>(i) + (a - 1) / 3.0};
            hits += placed[k].ink(placed[k].to_local(p));
          }
        }
        const double cover = hits / double(kSub * kSub);
        v = v * (1.0 - cover) + ink_level[k] * cover;
      }
      s.image.at(i, j) = detail::quantize(v + noise(rng));
    }
  }
  for (const auto& L : placed) s.words.push_back(L.annotation());
  return s;
}

/// n samples; sample i draws from its own generator seeded with (seed, i), so
/// the dataset is a pure function of (n, seed, options).
inline std::vector<LabeledSample> gen_synth_dataset(std::size_t n, std::uint64_t seed,
                                                    const SynthOptions& opt = {}) {
  if (n < 1) throw ContractError("gen_synth_dataset: n must be >= 1");
  std::vector<LabeledSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    char id[32];
    std::snprintf(id, sizeof(id), "img_%05zu", i);
    out.push_back(render_synth_sample(rng, opt, id));
  }
  return out;
}

}  // namespace textspotter::harness
