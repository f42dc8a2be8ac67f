// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//
// Random quadrilaterals and a brute-force NMS shared by the geometry tests and
// the acceptance runner.

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "textspotter/geometry/quad.hpp"

namespace fixtures {

using textspotter::geometry::Point;
using textspotter::geometry::Quadrilateral;
using textspotter::geometry::ScoredQuad;

// Four points on a random rotated ellipse at increasing angles: always convex
// and listed clockwise on screen.
inline Quadrilateral random_convex(std::mt19937_64& rng, double spread = 10.0) {
  std::uniform_real_distribution<double> c(-spread, spread), ax(1.0, 6.0), rot(-std::numbers::pi, std::numbers::pi),
      jitter(0.15, 1.4);
  const Point center{c(rng), c(rng)};
  const double a = ax(rng), b = ax(rng), r = rot(rng);
  std::array<double, 4> t;
  double acc = rot(rng);
  for (double& v : t) {
    v = acc;
    acc += jitter(rng);
  }
  std::array<Point, 4> pts;
  for (std::size_t i = 0; i < 4; ++i) {
    const Point local{a * std::cos(t[i]), b * std::sin(t[i])};
    pts[i] = center + textspotter::geometry::rotate(local, r);
  }
  return Quadrilateral(pts);
}

inline std::array<oracle::P2, 4> to_p2(const Quadrilateral& q) {
  std::array<oracle::P2, 4> out;
  for (std::size_t i = 0; i < 4; ++i) out[i] = {q[i].x, q[i].y};
  return out;
}

// Repeatedly take the best remaining box, drop everything overlapping it.
inline std::vector<ScoredQuad> nms_oracle(std::vector<ScoredQuad> pool, double thr) {
  std::vector<ScoredQuad> kept;
  while (!pool.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i) {
      if (textspotter::geometry::score_order(pool[i], pool[best])) best = i;
    }
    const ScoredQuad top = pool[best];
    kept.push_back(top);
    std::vector<ScoredQuad> rest;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (i != best && textspotter::geometry::quad_iou(top.quad, pool[i].quad) <= thr) {
        rest.push_back(pool[i]);
      }
    }
    pool = std::move(rest);
  }
  return kept;
}

}  // namespace fixtures
