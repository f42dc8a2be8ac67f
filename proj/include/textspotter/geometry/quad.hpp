// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "textspotter/ndops/tensor.hpp"

namespace textspotter::geometry {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point, Point) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

/// Rotates v by `angle` radians using the standard rotation matrix in image
/// coordinates, so angle 0 maps +x to +x and pi/2 maps +x to +y.
inline Point rotate(Point v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Shoelace signed area; positive for corners listed clockwise on screen
/// (y pointing down).
template <std::size_t N>
double signed_area(const std::array<Point, N>& pts) {
  double s = 0.0;
  for (std::size_t i = 0; i < N; ++i) s += cross(pts[i], pts[(i + 1) % N]);
  return 0.5 * s;
}

inline double signed_area(const std::vector<Point>& pts) {
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    s += cross(pts[i], pts[(i + 1) % pts.size()]);
  }
  return 0.5 * s;
}

/// Four corners, clockwise from the top-left corner of the text's reading
/// orientation. Must be convex; collinear or coincident corners give a
/// degenerate (zero-area) quad, which is allowed but flagged.
class Quadrilateral {
 public:
  Quadrilateral() = default;

  explicit Quadrilateral(const std::array<Point, 4>& corners) : corners_(corners) {
    for (const Point& p : corners_) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw ContractError("quadrilateral corner is not finite");
      }
    }
    double scale = 0.0;
    for (const Point& p : corners_) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
    const double tol = 1e-9 * std::max(1.0, scale * scale);
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < 4; ++i) {
      const Point e0 = corners_[(i + 1) % 4] - corners_[i];
      const Point e1 = corners_[(i + 2) % 4] - corners_[(i + 1) % 4];
      const double c = cross(e0, e1);
      if (c > tol) pos = true;
      if (c < -tol) neg = true;
    }
    if (pos && neg) {
      throw ContractError("quadrilateral is not convex: " + to_string());
    }
    degenerate_ = std::abs(signed_area(corners_)) <= tol;
  }

  Quadrilateral(Point a, Point b, Point c, Point d)
      : Quadrilateral(std::array<Point, 4>{a, b, c, d}) {}

  /// Axis-aligned rectangle from (x0,y0) to (x1,y1).
  static Quadrilateral rect(double x0, double y0, double x1, double y1) {
    return Quadrilateral({x0, y0}, {x1, y0}, {x1, y1}, {x0, y1});
  }

  const std::array<Point, 4>& corners() const { return corners_; }
  const Point& operator[](std::size_t i) const { return corners_[i]; }
  bool degenerate() const { return degenerate_; }

  Point centroid() const {
    return 0.25 * (corners_[0] + corners_[1] + corners_[2] + corners_[3]);
  }

  /// Axis-aligned bounding rectangle.
  Quadrilateral bounding_rect() const {
    double x0 = corners_[0].x, x1 = x0, y0 = corners_[0].y, y1 = y0;
    for (const Point& p : corners_) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    return rect(x0, y0, x1, y1);
  }

  /// Direction of the top edge (reading direction), atan2 convention.
  double angle() const {
    const Point e = corners_[1] - corners_[0];
    return std::atan2(e.y, e.x);
  }

  std::string to_string() const;

  friend bool operator==(const Quadrilateral& a, const Quadrilateral& b) {
    return a.corners_ == b.corners_;
  }

 private:
  std::array<Point, 4> corners_{};
  bool degenerate_ = true;
};

/// Five-parameter rotated box: distances from `anchor` to the four sides,
/// measured in the box frame, plus the reading-direction angle.
struct RBox {
  Point anchor;
  double top = 0.0;
  double bottom = 0.0;
  double left = 0.0;
  double right = 0.0;
  double angle = 0.0;  // radians in (-pi/2, pi/2]

  bool valid() const {
    return top >= 0 && bottom >= 0 && left >= 0 && right >= 0 &&
           angle > -std::numbers::pi / 2 && angle <= std::numbers::pi / 2 &&
           (top + bottom > 0 || left + right > 0);
  }
};

struct ScoredQuad {
  Quadrilateral quad;
  double score = 0.0;
};

inline Quadrilateral decode_rbox(const RBox& r) {
  if (!r.valid()) throw ContractError("decode_rbox: invalid RBox");
  const std::array<Point, 4> local{Point{-r.left, -r.top}, Point{r.right, -r.top},
                                   Point{r.right, r.bottom}, Point{-r.left, r.bottom}};
  std::array<Point, 4> out;
  for (std::size_t i = 0; i < 4; ++i) out[i] = r.anchor + rotate(local[i], r.angle);
  return Quadrilateral(out);
}

/// Inverse of decode_rbox for a given anchor. Side distances are taken as the
/// mean offset of the two corners on each side, which is exact for
/// rectangles.
inline RBox encode_rbox(const Quadrilateral& q, Point anchor) {
  RBox r;
  r.anchor = anchor;
  r.angle = q.angle();
  std::array<Point, 4> local;
  for (std::size_t i = 0; i < 4; ++i) local[i] = rotate(q[i] - anchor, -r.angle);
  r.top = -0.5 * (local[0].y + local[1].y);
  r.bottom = 0.5 * (local[2].y + local[3].y);
  r.left = -0.5 * (local[0].x + local[3].x);
  r.right = 0.5 * (local[1].x + local[2].x);
  return r;
}

/// Shoelace area; exactly 0 for quads flagged degenerate.
inline double quad_area(const Quadrilateral& q) {
  if (q.degenerate()) return 0.0;
  return std::abs(signed_area(q.corners()));
}

namespace detail {

// Clips a convex polygon against a convex clip polygon with positive signed
// area (Sutherland-Hodgman).
inline std::vector<Point> clip_convex(std::vector<Point> subject,
                                      const std::array<Point, 4>& clip) {
  for (std::size_t e = 0; e < 4 && !subject.empty(); ++e) {
    const Point a = clip[e], b = clip[(e + 1) % 4];
    const Point edge = b - a;
    std::vector<Point> out;
    out.reserve(subject.size() + 2);
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const Point p = subject[i];
      const Point q = subject[(i + 1) % subject.size()];
      const double sp = cross(edge, p - a);
      const double sq = cross(edge, q - a);
      if (sp >= 0) out.push_back(p);
      if ((sp >= 0) != (sq >= 0)) {
        const double t = sp / (sp - sq);
        out.push_back(p + t * (q - p));
      }
    }
    subject = std::move(out);
  }
  return subject;
}

inline std::array<Point, 4> positively_oriented(const Quadrilateral& q) {
  auto c = q.corners();
  if (signed_area(c) < 0) std::reverse(c.begin(), c.end());
  return c;
}

}  // namespace detail

inline double intersection_area(const Quadrilateral& a, const Quadrilateral& b) {
  if (a.degenerate() || b.degenerate()) return 0.0;
  const auto ca = detail::positively_oriented(a);
  const auto cb = detail::positively_oriented(b);
  auto poly = detail::clip_convex(std::vector<Point>(ca.begin(), ca.end()), cb);
  if (poly.size() < 3) return 0.0;
  return std::abs(signed_area(poly));
}

/// Intersection over union of two convex quads; 0 when the union is empty.
inline double quad_iou(const Quadrilateral& a, const Quadrilateral& b) {
  const double inter = intersection_area(a, b);
  const double uni = quad_area(a) + quad_area(b) - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

/// Descending score; equal scores ordered by lexicographic corner
/// coordinates (x1,y1,...,x4,y4 ascending).
inline bool score_order(const ScoredQuad& a, const ScoredQuad& b) {
  if (a.score != b.score) return a.score > b.score;
  for (std::size_t i = 0; i < 4; ++i) {
    if (a.quad[i].x != b.quad[i].x) return a.quad[i].x < b.quad[i].x;
    if (a.quad[i].y != b.quad[i].y) return a.quad[i].y < b.quad[i].y;
  }
  return false;
}

/// Greedy non-maximum suppression. A box is dropped when its IoU with an
/// already kept box exceeds `iou_threshold`.
inline std::vector<ScoredQuad> nms(std::vector<ScoredQuad> boxes,
                                   double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw ContractError("nms: iou_threshold must lie in (0, 1)");
  }
  std::stable_sort(boxes.begin(), boxes.end(), score_order);
  std::vector<ScoredQuad> kept;
  for (const auto& b : boxes) {
    bool suppressed = false;
    for (const auto& k : kept) {
      if (quad_iou(k.quad, b.quad) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(b);
  }
  return kept;
}

/// Signed coordinate of p along q's reading direction (top edge), measured
/// from q's top-left corner.
inline double project_onto_axis(Point p, const Quadrilateral& q) {
  const Point axis = q[1] - q[0];
  const double len = norm(axis);
  if (q.degenerate() || len <= 0.0) {
    throw ContractError("project_onto_axis: degenerate quadrilateral");
  }
  return dot(p - q[0], (1.0 / len) * axis);
}

// ---------------------------------------------------------------------------
// text form: "x1,y1,x2,y2,x3,y3,x4,y4"

namespace detail {

inline void append_number(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace detail

inline std::string Quadrilateral::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < 4; ++i) {
    if (i) s += ',';
    detail::append_number(s, corners_[i].x);
    s += ',';
    detail::append_number(s, corners_[i].y);
  }
  return s;
}

/// Parses the first eight comma-separated numbers of `text`. `rest`, when
/// given, receives whatever follows the eighth number's comma.
inline Quadrilateral parse_quad(std::string_view text,
                                std::string_view* rest = nullptr) {
  std::array<double, 8> v{};
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (std::size_t i = 0; i < 8; ++i) {
    while (p < end && *p == ' ') ++p;
    auto res = std::from_chars(p, end, v[i]);
    if (res.ec != std::errc()) {
      throw ConfigError("malformed quadrilateral: " + std::string(text));
    }
    p = res.ptr;
    while (p < end && *p == ' ') ++p;
    if (i < 7 || rest) {
      if (p < end && *p == ',') {
        ++p;
      } else if (i < 7) {
        throw ConfigError("malformed quadrilateral: " + std::string(text));
      }
    }
  }
  if (rest) *rest = std::string_view(p, static_cast<std::size_t>(end - p));
  return Quadrilateral({v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]}, {v[6], v[7]});
}

}  // namespace textspotter::geometry
