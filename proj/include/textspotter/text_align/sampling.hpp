// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "textspotter/geometry/quad.hpp"
#include "textspotter/ndops/tensor.hpp"

namespace textspotter::text_align {

using geometry::Point;
using geometry::Quadrilateral;
using ndops::Tensor;

/// h x w sample positions inside a quadrilateral, row-major, plus each
/// column's center projected onto the quad's reading axis.
struct SamplingGrid {
  std::size_t h = 0;
  std::size_t w = 0;
  std::vector<Point> points;
  std::vector<double> column_centers;

  const Point& at(std::size_t row, std::size_t col) const {
    return points[row * w + col];
  }
};

/// Point (i, j) is the bilinear blend of the corners at cell-center
/// coordinates ((j + 0.5) / w, (i + 0.5) / h).
inline SamplingGrid build_grid(const Quadrilateral& q, std::size_t w,
                               std::size_t h) {
  if (w < 1 || h < 1) throw ContractError("build_grid: w and h must be >= 1");
  if (q.degenerate()) throw ContractError("build_grid: degenerate quadrilateral");
  SamplingGrid g{h, w, std::vector<Point>(h * w), std::vector<double>(w)};
  for (std::size_t i = 0; i < h; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(h);
    for (std::size_t j = 0; j < w; ++j) {
      const double s = (static_cast<double>(j) + 0.5) / static_cast<double>(w);
      g.points[i * w + j] = (1 - s) * (1 - t) * q[0] + s * (1 - t) * q[1] +
                            s * t * q[2] + (1 - s) * t * q[3];
    }
  }
  for (std::size_t j = 0; j < w; ++j) {
    Point mean{};
    for (std::size_t i = 0; i < h; ++i) mean = mean + g.points[i * w + j];
    g.column_centers[j] = geometry::project_onto_axis(
        (1.0 / static_cast<double>(h)) * mean, q);
  }
  return g;
}

/// One lattice neighbour of a sample point and its interpolation weight.
struct Tap {
  std::size_t row;
  std::size_t col;
  double weight;
};

/// Triangular interpolation kernel g(m, n) = max(0, 1 - |m - n|).
inline double kernel(double m, double n) {
  return std::max(0.0, 1.0 - std::abs(m - n));
}

/// In-bounds lattice neighbours of p = (x: column, y: row) with nonzero
/// weight g(px, nx) * g(py, ny). Neighbours outside the H x W lattice are
/// dropped, i.e. the map is zero padded.
inline std::vector<Tap> bilinear_taps(Point p, std::size_t H, std::size_t W) {
  std::vector<Tap> taps;
  taps.reserve(4);
  const double x0 = std::floor(p.x), y0 = std::floor(p.y);
  for (int dy = 0; dy <= 1; ++dy) {
    for (int dx = 0; dx <= 1; ++dx) {
      const double nx = x0 + dx, ny = y0 + dy;
      if (nx < 0 || ny < 0 || nx > static_cast<double>(W) - 1 ||
          ny > static_cast<double>(H) - 1) {
        continue;
      }
      const double wgt = kernel(p.x, nx) * kernel(p.y, ny);
      if (wgt == 0.0) continue;
      taps.push_back({static_cast<std::size_t>(ny), static_cast<std::size_t>(nx), wgt});
    }
  }
  return taps;
}

inline void require_hwc(const Tensor& fmap, const char* who) {
  if (fmap.rank() != 3) {
    throw DimensionError(std::string(who) + ": feature map must be [H,W,C], got " +
                         ndops::shape_string(fmap.shape()));
  }
}

/// v_p = sum over neighbours of v_i * g(px, xi) * g(py, yi).
inline Tensor bilinear_sample(const Tensor& fmap, Point p) {
  require_hwc(fmap, "bilinear_sample");
  const std::size_t H = fmap.dim(0), W = fmap.dim(1), C = fmap.dim(2);
  Tensor v({C});
  for (const Tap& t : bilinear_taps(p, H, W)) {
    const double* src = fmap.ptr() + (t.row * W + t.col) * C;
    for (std::size_t c = 0; c < C; ++c) v[c] += t.weight * src[c];
  }
  return v;
}

/// Gradient of one sample's output with respect to one lattice cell.
struct CellGradient {
  std::size_t row;
  std::size_t col;
  Tensor grad;  // [C]
};

/// d(loss)/d(fmap) for one sample: grad_out scaled by each neighbour's
/// interpolation weight. Only the (at most four) touched cells are returned.
inline std::vector<CellGradient> bilinear_backward(const Tensor& grad_out, Point p,
                                                   const ndops::Shape& fmap_shape) {
  if (fmap_shape.size() != 3 || grad_out.rank() != 1 ||
      grad_out.dim(0) != fmap_shape[2]) {
    throw DimensionError("bilinear_backward: grad_out does not match channels");
  }
  std::vector<CellGradient> out;
  for (const Tap& t : bilinear_taps(p, fmap_shape[0], fmap_shape[1])) {
    Tensor g = grad_out;
    g *= t.weight;
    out.push_back({t.row, t.col, std::move(g)});
  }
  return out;
}

}  // namespace textspotter::text_align
