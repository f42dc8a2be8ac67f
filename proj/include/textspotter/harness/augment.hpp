// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>

#include "textspotter/harness/sample.hpp"

namespace textspotter::harness {

struct AugmentOptions {
  double max_rotation_deg = 20.0;
  double min_scale = 1.0;
  double max_scale = 1.25;
  double max_shift = 8.0;  // crop center offset from the image center, pixels
  std::size_t crop_h = 96;
  std::size_t crop_w = 96;
};

/// A similarity transform followed by a crop:
///   p_out = scale * R(angle) * (p - src_center) + dst_center
/// where dst_center is the crop center moved by `shift`.
struct AugmentParams {
  double scale = 1.0;
  double angle = 0.0;  // radians
  Point shift;
  std::size_t crop_h = 0;
  std::size_t crop_w = 0;
};

namespace detail {

inline double border_sample(const Tensor& img, double x, double y) {
  const double H = static_cast<double>(img.dim(0)), W = static_cast<double>(img.dim(1));
  x = std::clamp(x, 0.0, W - 1.0);
  y = std::clamp(y, 0.0, H - 1.0);
  const auto x0 = static_cast<std::size_t>(std::floor(x));
  const auto y0 = static_cast<std::size_t>(std::floor(y));
  const std::size_t x1 = std::min(x0 + 1, img.dim(1) - 1), y1 = std::min(y0 + 1, img.dim(0) - 1);
  const double fx = x - static_cast<double>(x0), fy = y - static_cast<double>(y0);
  return (1 - fy) * ((1 - fx) * img.at(y0, x0) + fx * img.at(y0, x1)) +
         fy * ((1 - fx) * img.at(y1, x0) + fx * img.at(y1, x1));
}

}  // namespace detail

/// Applies `a` to the image (bilinear, edge-replicated) and to every quad,
/// center and width. Words entirely outside the crop are dropped with their
/// characters; clipped words are kept whole.
inline LabeledSample augment_with(const LabeledSample& s, const AugmentParams& a) {
  if (!(a.scale > 0)) throw ContractError("augment: scale must be > 0");
  const std::size_t oh = a.crop_h ? a.crop_h : s.height();
  const std::size_t ow = a.crop_w ? a.crop_w : s.width();
  const Point src_c{0.5 * (static_cast<double>(s.width()) - 1.0),
                    0.5 * (static_cast<double>(s.height()) - 1.0)};
  const Point dst_c = Point{0.5 * (static_cast<double>(ow) - 1.0),
                            0.5 * (static_cast<double>(oh) - 1.0)} + a.shift;
  // a pure translation is applied as such so that it is exact
  const bool rigid = a.scale == 1.0 && a.angle == 0.0;
  const Point t = dst_c - src_c;
  auto fwd = [&](Point p) {
    return rigid ? p + t : a.scale * geometry::rotate(p - src_c, a.angle) + dst_c;
  };
  auto inv = [&](Point q) {
    return rigid ? q - t : src_c + (1.0 / a.scale) * geometry::rotate(q - dst_c, -a.angle);
  };
  auto map_quad = [&](const Quadrilateral& q) {
    std::array<Point, 4> c;
    for (std::size_t i = 0; i < 4; ++i) c[i] = fwd(q[i]);
    return Quadrilateral(c);
  };

  LabeledSample out;
  out.id = s.id;
  out.source = s.source;
  out.image = Tensor({oh, ow});
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      const Point p = inv({static_cast<double>(j), static_cast<double>(i)});
      out.image.at(i, j) = detail::border_sample(s.image, p.x, p.y);
    }
  }
  const double xmax = static_cast<double>(ow) - 0.5, ymax = static_cast<double>(oh) - 0.5;
  const Quadrilateral crop(std::array<Point, 4>{Point{-0.5, -0.5}, Point{xmax, -0.5},
                                                Point{xmax, ymax}, Point{-0.5, ymax}});
  for (const auto& w : s.words) {
    WordAnnotation m{map_quad(w.quad), w.text, {}};
    if (!(geometry::intersection_area(m.quad, crop) > 0.0)) continue;
    for (const auto& c : w.chars) {
      m.chars.push_back({map_quad(c.quad), c.label, fwd(c.center), a.scale * c.width});
    }
    out.words.push_back(std::move(m));
  }
  return out;
}

/// Draws the transform from `seed`: rotation uniform in +-max_rotation_deg,
/// scale uniform in [min_scale, max_scale], crop center shifted uniformly by
/// up to max_shift per axis.
inline AugmentParams draw_augment_params(std::uint64_t seed, const AugmentOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AugmentParams a;
  a.angle = (2.0 * unit(rng) - 1.0) * opt.max_rotation_deg * std::numbers::pi / 180.0;
  a.scale = opt.min_scale + unit(rng) * (opt.max_scale - opt.min_scale);
  a.shift = {(2.0 * unit(rng) - 1.0) * opt.max_shift, (2.0 * unit(rng) - 1.0) * opt.max_shift};
  a.crop_h = opt.crop_h;
  a.crop_w = opt.crop_w;
  return a;
}

inline LabeledSample augment(const LabeledSample& s, std::uint64_t seed,
                             const AugmentOptions& opt = {}) {
  return augment_with(s, draw_augment_params(seed, opt));
}

}  // namespace textspotter::harness
