// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

#include "textspotter/text_align/sampling.hpp"

namespace textspotter::text_align {

enum class PoolingMode { kRoiPool, kRoiAlign, kTextAlign };

inline PoolingMode parse_pooling_mode(std::string_view s) {
  if (s == "roi") return PoolingMode::kRoiPool;
  if (s == "roialign") return PoolingMode::kRoiAlign;
  if (s == "textalign") return PoolingMode::kTextAlign;
  throw ConfigError("unknown pooling mode: " + std::string(s));
}

inline const char* pooling_mode_name(PoolingMode m) {
  switch (m) {
    case PoolingMode::kRoiPool: return "roi";
    case PoolingMode::kRoiAlign: return "roialign";
    case PoolingMode::kTextAlign: return "textalign";
  }
  return "?";
}

/// Fixed-size h x w x C features pooled from one region.
///
/// `grid` is expressed in the coordinates of the region (image pixels when
/// pooling from a strided feature map); `spatial_scale` maps those
/// coordinates onto the feature lattice. Max pooling additionally records
/// the flat source index of every output element in `argmax`.
struct PooledFeature {
  Tensor tensor;  // [h, w, C]
  SamplingGrid grid;
  Quadrilateral source_quad;
  double spatial_scale = 1.0;
  std::vector<std::size_t> argmax;
};

/// Region coordinate -> feature lattice coordinate. Lattice node k sits at
/// the center of the k-th stride-sized block of input pixels.
inline Point to_feature_coords(Point p, double spatial_scale) {
  return {(p.x + 0.5) * spatial_scale - 0.5, (p.y + 0.5) * spatial_scale - 0.5};
}

namespace detail {

inline PooledFeature sample_grid(const Tensor& fmap, SamplingGrid grid,
                                 const Quadrilateral& source, double spatial_scale) {
  const std::size_t H = fmap.dim(0), W = fmap.dim(1), C = fmap.dim(2);
  PooledFeature out{Tensor({grid.h, grid.w, C}), std::move(grid), source,
                    spatial_scale, {}};
  for (std::size_t i = 0; i < out.grid.h; ++i) {
    for (std::size_t j = 0; j < out.grid.w; ++j) {
      const Point p = to_feature_coords(out.grid.at(i, j), spatial_scale);
      double* dst = out.tensor.ptr() + (i * out.grid.w + j) * C;
      for (const Tap& t : bilinear_taps(p, H, W)) {
        const double* src = fmap.ptr() + (t.row * W + t.col) * C;
        for (std::size_t c = 0; c < C; ++c) dst[c] += t.weight * src[c];
      }
    }
  }
  return out;
}

}  // namespace detail

/// Samples an h x w grid laid out inside q (cell centers, bilinear corner
/// blend) with bilinear interpolation. Output shape does not depend on the
/// size or orientation of q.
inline PooledFeature text_align_pool(const Tensor& fmap, const Quadrilateral& q,
                                     std::size_t w, std::size_t h,
                                     double spatial_scale = 1.0) {
  require_hwc(fmap, "text_align_pool");
  return detail::sample_grid(fmap, build_grid(q, w, h), q, spatial_scale);
}

/// Same sampling as text_align_pool but over q's axis-aligned bounding
/// rectangle.
inline PooledFeature roi_align_baseline(const Tensor& fmap, const Quadrilateral& q,
                                        std::size_t w, std::size_t h,
                                        double spatial_scale = 1.0) {
  require_hwc(fmap, "roi_align_baseline");
  return detail::sample_grid(fmap, build_grid(q.bounding_rect(), w, h), q,
                             spatial_scale);
}

/// Classic RoI max pooling over q's bounding rectangle: the rectangle is
/// rounded to lattice cells, split into h x w bins with floor/ceil
/// boundaries, and each bin takes its channel-wise maximum. A bin that ends
/// up empty (region outside the map) reads the nearest in-bounds cell.
inline PooledFeature roi_pool_baseline(const Tensor& fmap, const Quadrilateral& q,
                                       std::size_t w, std::size_t h,
                                       double spatial_scale = 1.0) {
  require_hwc(fmap, "roi_pool_baseline");
  const std::size_t H = fmap.dim(0), W = fmap.dim(1), C = fmap.dim(2);
  const Quadrilateral rect = q.bounding_rect();
  PooledFeature out{Tensor({h, w, C}), build_grid(rect, w, h), q, spatial_scale,
                    std::vector<std::size_t>(h * w * C)};
  const Point lo = to_feature_coords(rect[0], spatial_scale);
  const Point hi = to_feature_coords(rect[2], spatial_scale);
  const long x_start = std::lround(lo.x), y_start = std::lround(lo.y);
  const long x_end = std::lround(hi.x), y_end = std::lround(hi.y);
  const double roi_w = static_cast<double>(std::max(x_end - x_start + 1, 1L));
  const double roi_h = static_cast<double>(std::max(y_end - y_start + 1, 1L));
  const double bin_w = roi_w / static_cast<double>(w);
  const double bin_h = roi_h / static_cast<double>(h);
  auto clampi = [](long v, long lo_, long hi_) { return std::min(std::max(v, lo_), hi_); };

  for (std::size_t i = 0; i < h; ++i) {
    long hs = static_cast<long>(std::floor(static_cast<double>(i) * bin_h)) + y_start;
    long he = static_cast<long>(std::ceil(static_cast<double>(i + 1) * bin_h)) + y_start;
    hs = clampi(hs, 0, static_cast<long>(H));
    he = clampi(he, 0, static_cast<long>(H));
    if (he <= hs) {
      hs = clampi(hs, 0, static_cast<long>(H) - 1);
      he = hs + 1;
    }
    for (std::size_t j = 0; j < w; ++j) {
      long ws = static_cast<long>(std::floor(static_cast<double>(j) * bin_w)) + x_start;
      long we = static_cast<long>(std::ceil(static_cast<double>(j + 1) * bin_w)) + x_start;
      ws = clampi(ws, 0, static_cast<long>(W));
      we = clampi(we, 0, static_cast<long>(W));
      if (we <= ws) {
        ws = clampi(ws, 0, static_cast<long>(W) - 1);
        we = ws + 1;
      }
      for (std::size_t c = 0; c < C; ++c) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        for (long y = hs; y < he; ++y) {
          for (long x = ws; x < we; ++x) {
            const std::size_t idx =
                (static_cast<std::size_t>(y) * W + static_cast<std::size_t>(x)) * C + c;
            if (fmap[idx] > best) {
              best = fmap[idx];
              best_idx = idx;
            }
          }
        }
        const std::size_t o = (i * w + j) * C + c;
        out.tensor[o] = best;
        out.argmax[o] = best_idx;
      }
    }
  }
  return out;
}

inline PooledFeature pool(PoolingMode mode, const Tensor& fmap, const Quadrilateral& q,
                          std::size_t w, std::size_t h, double spatial_scale = 1.0) {
  switch (mode) {
    case PoolingMode::kRoiPool: return roi_pool_baseline(fmap, q, w, h, spatial_scale);
    case PoolingMode::kRoiAlign: return roi_align_baseline(fmap, q, w, h, spatial_scale);
    case PoolingMode::kTextAlign: break;
  }
  return text_align_pool(fmap, q, w, h, spatial_scale);
}

/// The quad whose reading axis the pooled grid's column centers are measured
/// along: q itself for text alignment, its bounding rectangle otherwise.
inline Quadrilateral grid_frame(PoolingMode mode, const Quadrilateral& q) {
  return mode == PoolingMode::kTextAlign ? q : q.bounding_rect();
}

/// Scatters d(loss)/d(pooled) back onto the feature map; result has
/// `fmap_shape` ([H,W,C]).
inline Tensor pool_backward(const PooledFeature& pooled, const Tensor& grad,
                            const ndops::Shape& fmap_shape) {
  pooled.tensor.require_same_shape(grad, "pool_backward");
  Tensor dmap(fmap_shape);
  const std::size_t H = fmap_shape[0], W = fmap_shape[1], C = fmap_shape[2];
  if (!pooled.argmax.empty()) {
    for (std::size_t o = 0; o < grad.size(); ++o) dmap[pooled.argmax[o]] += grad[o];
    return dmap;
  }
  const auto& g = pooled.grid;
  for (std::size_t i = 0; i < g.h; ++i) {
    for (std::size_t j = 0; j < g.w; ++j) {
      const Point p = to_feature_coords(g.at(i, j), pooled.spatial_scale);
      const double* src = grad.ptr() + (i * g.w + j) * C;
      for (const Tap& t : bilinear_taps(p, H, W)) {
        double* dst = dmap.ptr() + (t.row * W + t.col) * C;
        for (std::size_t c = 0; c < C; ++c) dst[c] += t.weight * src[c];
      }
    }
  }
  return dmap;
}

}  // namespace textspotter::text_align
