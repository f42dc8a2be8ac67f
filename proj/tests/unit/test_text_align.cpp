// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "textspotter/ndops/grad_check.hpp"
#include "textspotter/text_align/pooling.hpp"

namespace ts = textspotter;
namespace ta = textspotter::text_align;
using ts::geometry::Point;
using ts::geometry::Quadrilateral;
using ts::ndops::Tensor;

namespace {

constexpr double kPi = std::numbers::pi;

Tensor random_map(std::size_t H, std::size_t W, std::size_t C, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor t({H, W, C});
  for (double& v : t.storage()) v = u(rng);
  return t;
}

// f(x, y) = a*x + b*y + c on the lattice, x = column, y = row.
Tensor affine_field(std::size_t H, std::size_t W, double a, double b, double c) {
  Tensor t({H, W, 1});
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W; ++j) t.at(i, j, 0) = a * j + b * i + c;
  return t;
}

Quadrilateral rotated_rect(Point center, double half_w, double half_h, double angle) {
  return ts::geometry::decode_rbox({center, half_h, half_h, half_w, half_w, angle});
}

}  // namespace

// --------------------------------------------------------------------------
// build_grid

TEST(BuildGrid, CellCentersOfAxisAlignedRect) {
  const auto g = ta::build_grid(Quadrilateral::rect(0, 0, 8, 2), 4, 2);
  ASSERT_EQ(g.points.size(), 8u);
  const double xs[] = {1, 3, 5, 7}, ys[] = {0.5, 1.5};
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_DOUBLE_EQ(g.at(i, j).x, xs[j]);
      EXPECT_DOUBLE_EQ(g.at(i, j).y, ys[i]);
    }
  for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(g.column_centers[j], xs[j]);
}

TEST(BuildGrid, SinglePointIsCornerBlendCentre) {
  const Quadrilateral q({0, 0}, {6, 1}, {7, 5}, {-1, 4});
  const auto g = ta::build_grid(q, 1, 1);
  const Point c = q.centroid();
  EXPECT_NEAR(g.at(0, 0).x, c.x, 1e-15);
  EXPECT_NEAR(g.at(0, 0).y, c.y, 1e-15);
}

TEST(BuildGrid, RotatedRectIsRotatedGrid) {
  const Point center{20, 15};
  for (double angle : {0.3, -0.7, kPi / 2, 1.2}) {
    const auto flat = ta::build_grid(rotated_rect(center, 8, 2, 0.0), 6, 3);
    const auto rot = ta::build_grid(rotated_rect(center, 8, 2, angle), 6, 3);
    const double c = std::cos(angle), s = std::sin(angle);
    for (std::size_t k = 0; k < flat.points.size(); ++k) {
      const Point d = flat.points[k] - center;
      EXPECT_NEAR(rot.points[k].x, center.x + c * d.x - s * d.y, 1e-12);
      EXPECT_NEAR(rot.points[k].y, center.y + s * d.x + c * d.y, 1e-12);
    }
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_NEAR(rot.column_centers[j], flat.column_centers[j], 1e-12);
    }
  }
}

TEST(BuildGrid, InvariantsOnRandomQuads) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pos(5, 40), half(1.5, 12), ang(-1.2, 1.2);
  for (int k = 0; k < 200; ++k) {
    const auto q = rotated_rect({pos(rng), pos(rng)}, half(rng), half(rng) / 3 + 0.5, ang(rng));
    const auto g = ta::build_grid(q, 7, 3);
    for (std::size_t j = 1; j < 7; ++j) EXPECT_GT(g.column_centers[j], g.column_centers[j - 1]);
    for (const Point& p : g.points) {
      // inside: on the inner side of all four edges
      for (std::size_t e = 0; e < 4; ++e) {
        const Point a = q[e], b = q[(e + 1) % 4];
        EXPECT_GE(ts::geometry::cross(b - a, p - a), -1e-9);
      }
    }
  }
}

TEST(BuildGrid, Errors) {
  EXPECT_THROW(ta::build_grid(Quadrilateral::rect(0, 0, 1, 1), 0, 1), ts::ContractError);
  const Quadrilateral line({0, 0}, {1, 0}, {2, 0}, {3, 0});
  EXPECT_THROW(ta::build_grid(line, 2, 2), ts::ContractError);
}

// --------------------------------------------------------------------------
// bilinear_sample / bilinear_backward

TEST(BilinearSample, LatticeNodeReturnsCell) {
  std::mt19937_64 rng(10);
  const Tensor f = random_map(5, 6, 3, rng);
  const Tensor v = ta::bilinear_sample(f, {3.0, 2.0});
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(v[c], f.at(2, 3, c));
}

TEST(BilinearSample, CellCentreAveragesCorners) {
  Tensor f({2, 2, 1});
  f.at(1, 1, 0) = 4.0;
  EXPECT_DOUBLE_EQ(ta::bilinear_sample(f, {0.5, 0.5})[0], 1.0);
}

TEST(BilinearSample, ReproducesAffineFields) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coef(-3, 3), px(0, 11), py(0, 8);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double a = coef(rng), b = coef(rng), c = coef(rng);
    const Tensor f = affine_field(9, 12, a, b, c);
    const Point p{px(rng), py(rng)};
    worst = std::max(worst, std::abs(ta::bilinear_sample(f, p)[0] - (a * p.x + b * p.y + c)));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(BilinearSample, OutOfBoundsNeighboursAreZero) {
  const Tensor f({3, 3, 1}, 1.0);
  EXPECT_DOUBLE_EQ(ta::bilinear_sample(f, {-0.5, 1.0})[0], 0.5);
  EXPECT_DOUBLE_EQ(ta::bilinear_sample(f, {2.5, 2.5})[0], 0.25);
  EXPECT_EQ(ta::bilinear_sample(f, {-3.0, 1.0})[0], 0.0);
}

TEST(BilinearBackward, NodeTouchesOneCell) {
  const auto g = ta::bilinear_backward(Tensor::vector({2, 3}), {1.0, 2.0}, {4, 4, 2});
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].row, 2u);
  EXPECT_EQ(g[0].col, 1u);
  EXPECT_EQ(g[0].grad, Tensor::vector({2, 3}));
}

TEST(BilinearBackward, CellCentreQuarterWeights) {
  const auto g = ta::bilinear_backward(Tensor::vector({1}), {0.5, 0.5}, {2, 2, 1});
  ASSERT_EQ(g.size(), 4u);
  for (const auto& c : g) EXPECT_DOUBLE_EQ(c.grad[0], 0.25);
}

TEST(BilinearBackward, InteriorWeightsAreConvex) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> px(0, 9), py(0, 6);
  for (int k = 0; k < 1000; ++k) {
    double s = 0.0;
    for (const auto& t : ta::bilinear_taps({px(rng), py(rng)}, 7, 10)) {
      EXPECT_GE(t.weight, 0.0);
      s += t.weight;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(BilinearBackward, MatchesCentralDifferences) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> px(0, 7), py(0, 5), frac(0.1, 0.9);
  for (int k = 0; k < 20; ++k) {
    const Tensor f = random_map(6, 8, 3, rng);
    const Point p{std::floor(px(rng)) + frac(rng), std::floor(py(rng)) + frac(rng)};
    const Tensor w = random_map(1, 1, 3, rng).reshaped({3});
    Tensor analytic(f.shape());
    for (const auto& c : ta::bilinear_backward(w, p, f.shape()))
      for (std::size_t ch = 0; ch < 3; ++ch) analytic.at(c.row, c.col, ch) += c.grad[ch];
    auto loss = [&](std::span<const double> v) {
      const Tensor ff(f.shape(), std::vector<double>(v.begin(), v.end()));
      const Tensor s = ta::bilinear_sample(ff, p);
      return s[0] * w[0] + s[1] * w[1] + s[2] * w[2];
    };
    const auto r = ts::ndops::grad_check(loss, f.data(), analytic.data());
    EXPECT_TRUE(r.passed) << r.max_rel_error;
  }
}

// --------------------------------------------------------------------------
// text_align_pool

TEST(TextAlignPool, ConstantMapGivesConstantOutput) {
  const Tensor f({10, 12, 2}, 0.75);
  const auto out = ta::text_align_pool(f, Quadrilateral::rect(2, 3, 8, 5), 4, 2);
  for (double v : out.tensor.data()) EXPECT_DOUBLE_EQ(v, 0.75);
}

TEST(TextAlignPool, TranslationEquivariance) {
  std::mt19937_64 rng(14);
  const Tensor f = random_map(12, 14, 2, rng);
  Tensor shifted({12, 14, 2});
  const std::size_t dx = 3, dy = 2;
  for (std::size_t i = 0; i + dy < 12; ++i)
    for (std::size_t j = 0; j + dx < 14; ++j)
      for (std::size_t c = 0; c < 2; ++c) shifted.at(i + dy, j + dx, c) = f.at(i, j, c);
  const auto q = rotated_rect({5, 4}, 3, 1.2, 0.4);
  const auto qs = rotated_rect({5.0 + dx, 4.0 + dy}, 3, 1.2, 0.4);
  const auto a = ta::text_align_pool(f, q, 6, 3), b = ta::text_align_pool(shifted, qs, 6, 3);
  for (std::size_t k = 0; k < a.tensor.size(); ++k) EXPECT_NEAR(a.tensor[k], b.tensor[k], 1e-12);
}

TEST(TextAlignPool, RotatedQuadOnXFieldGivesGridX) {
  const Tensor f = affine_field(30, 30, 1, 0, 0);
  const auto q = rotated_rect({14, 13}, 9, 3, 0.6);
  const auto out = ta::text_align_pool(f, q, 8, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(out.tensor.at(i, j, 0), out.grid.at(i, j).x, 1e-12);
}

TEST(TextAlignPool, ShapeIndependentOfQuad) {
  std::mt19937_64 rng(15);
  const Tensor f = random_map(20, 20, 3, rng);
  for (const auto& q : {rotated_rect({10, 10}, 8, 2, 0.1), rotated_rect({4, 5}, 2, 1, -1.0),
                        rotated_rect({50, 50}, 30, 9, 0.0)}) {
    for (auto mode : {ta::PoolingMode::kRoiPool, ta::PoolingMode::kRoiAlign,
                      ta::PoolingMode::kTextAlign}) {
      EXPECT_EQ(ta::pool(mode, f, q, 5, 2).tensor.shape(), (ts::ndops::Shape{2, 5, 3}));
    }
  }
}

TEST(TextAlignPool, GradientsMatchCentralDifferences) {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> pos(8, 20), ang(-0.8, 0.8);
  for (int k = 0; k < 20; ++k) {
    const Tensor f = random_map(8, 8, 2, rng);
    const auto q = rotated_rect({pos(rng), pos(rng)}, 9, 3, ang(rng));
    const auto pooled = ta::text_align_pool(f, q, 5, 2, 0.25);
    const Tensor w = random_map(2, 5, 2, rng);
    const Tensor analytic = ta::pool_backward(pooled, w, f.shape());
    auto loss = [&](std::span<const double> v) {
      const Tensor ff(f.shape(), std::vector<double>(v.begin(), v.end()));
      const Tensor y = ta::text_align_pool(ff, q, 5, 2, 0.25).tensor;
      double s = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
      return s;
    };
    const auto r = ts::ndops::grad_check(loss, f.data(), analytic.data());
    EXPECT_TRUE(r.passed) << r.max_rel_error;
  }
}

TEST(TextAlignPool, FeatureCoordinatesForStridedMaps) {
  // Lattice node k of a stride-4 map is centred on input pixels 4k..4k+3.
  const Point p = ta::to_feature_coords({5.5, 1.5}, 0.25);
  EXPECT_DOUBLE_EQ(p.x, 1.0);
  EXPECT_DOUBLE_EQ(p.y, 0.0);
}

// --------------------------------------------------------------------------
// roi_align_baseline

TEST(RoiAlign, EqualsTextAlignOnAxisAlignedQuads) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> pos(0, 8), len(1, 6);
  for (int k = 0; k < 100; ++k) {
    const Tensor f = random_map(16, 16, 3, rng);
    const double x0 = pos(rng), y0 = pos(rng);
    const auto q = Quadrilateral::rect(x0, y0, x0 + len(rng), y0 + len(rng));
    const auto a = ta::text_align_pool(f, q, 4, 2), b = ta::roi_align_baseline(f, q, 4, 2);
    EXPECT_EQ(a.tensor, b.tensor);
  }
}

TEST(RoiAlign, DiffersFromTextAlignOnRotatedQuad) {
  std::mt19937_64 rng(18);
  const Tensor f = random_map(20, 20, 1, rng);
  const auto q = rotated_rect({10, 10}, 7, 2, 0.5);
  EXPECT_NE(ta::text_align_pool(f, q, 6, 2).tensor, ta::roi_align_baseline(f, q, 6, 2).tensor);
}

TEST(RoiAlign, ConstantMapGivesConstantOutput) {
  const Tensor f({20, 20, 2}, -1.25);
  for (double a : {0.0, 0.3, -1.1}) {
    const auto out = ta::roi_align_baseline(f, rotated_rect({10, 10}, 6, 2, a), 6, 3);
    for (double v : out.tensor.data()) EXPECT_DOUBLE_EQ(v, -1.25);
  }
}

// --------------------------------------------------------------------------
// roi_pool_baseline

TEST(RoiPool, LatticeAlignedRectTakesPerCellValues) {
  std::mt19937_64 rng(19);
  const Tensor f = random_map(6, 8, 2, rng);
  // Pixel centres 2..5 in x and 1..2 in y: exactly 4 x 2 lattice cells.
  const auto out = ta::roi_pool_baseline(f, Quadrilateral::rect(2, 1, 5, 2), 4, 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(out.tensor.at(i, j, c), f.at(1 + i, 2 + j, c));
}

TEST(RoiPool, RotatedQuadPullsInBackground) {
  Tensor f({21, 21, 1});
  const auto q = rotated_rect({10, 10}, 6, 1, kPi / 4);
  // Mark every lattice cell outside q with a distinctive value.
  std::set<double> outside;
  for (std::size_t i = 0; i < 21; ++i)
    for (std::size_t j = 0; j < 21; ++j) {
      bool in = true;
      const Point p{static_cast<double>(j), static_cast<double>(i)};
      for (std::size_t e = 0; e < 4; ++e) {
        if (ts::geometry::cross(q[(e + 1) % 4] - q[e], p - q[e]) < 0) in = false;
      }
      f.at(i, j, 0) = in ? 0.0 : 1.0 + static_cast<double>(i * 21 + j);
      if (!in) outside.insert(f.at(i, j, 0));
    }
  const auto out = ta::roi_pool_baseline(f, q, 4, 4);
  bool any_outside = false;
  for (double v : out.tensor.data()) any_outside |= outside.count(v) > 0;
  EXPECT_TRUE(any_outside);
}

namespace {

// Direct nested-loop RoI max pooling over the rounded bounding rectangle.
Tensor roi_pool_oracle(const Tensor& f, const Quadrilateral& q, std::size_t w, std::size_t h) {
  const long H = static_cast<long>(f.dim(0)), W = static_cast<long>(f.dim(1));
  const std::size_t C = f.dim(2);
  const auto r = q.bounding_rect();
  const long x0 = std::lround(r[0].x), y0 = std::lround(r[0].y);
  const long x1 = std::lround(r[2].x), y1 = std::lround(r[2].y);
  const double bw = std::max(x1 - x0 + 1, 1L) / static_cast<double>(w);
  const double bh = std::max(y1 - y0 + 1, 1L) / static_cast<double>(h);
  Tensor out({h, w, C});
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t c = 0; c < C; ++c) {
        double best = -1e300;
        bool found = false;
        for (long y = 0; y < H; ++y)
          for (long x = 0; x < W; ++x) {
            const bool in_y = y >= y0 + static_cast<long>(std::floor(i * bh)) &&
                              y < y0 + static_cast<long>(std::ceil((i + 1) * bh));
            const bool in_x = x >= x0 + static_cast<long>(std::floor(j * bw)) &&
                              x < x0 + static_cast<long>(std::ceil((j + 1) * bw));
            if (in_y && in_x) {
              best = std::max(best, f.at(y, x, c));
              found = true;
            }
          }
        out.at(i, j, c) = found ? best : std::nan("");
      }
  return out;
}

}  // namespace

TEST(RoiPool, MatchesBruteForceOracle) {
  std::mt19937_64 rng(20);
  std::uniform_real_distribution<double> pos(2, 16), half(1, 6), ang(-1, 1);
  int compared = 0;
  for (int k = 0; k < 200; ++k) {
    const Tensor f = random_map(20, 20, 2, rng);
    const auto q = rotated_rect({pos(rng), pos(rng)}, half(rng), half(rng) / 2 + 0.3, ang(rng));
    const auto got = ta::roi_pool_baseline(f, q, 5, 3);
    const Tensor want = roi_pool_oracle(f, q, 5, 3);
    for (std::size_t n = 0; n < want.size(); ++n) {
      if (std::isnan(want[n])) continue;  // empty bin; covered by the replication rule
      EXPECT_EQ(got.tensor[n], want[n]);
      ++compared;
    }
  }
  EXPECT_GT(compared, 2000);
}

TEST(RoiPool, GradientRoutesToArgmax) {
  std::mt19937_64 rng(21);
  const Tensor f = random_map(10, 10, 2, rng);
  const auto pooled = ta::roi_pool_baseline(f, Quadrilateral::rect(1, 1, 8, 6), 3, 2);
  const Tensor w = random_map(2, 3, 2, rng);
  const Tensor analytic = ta::pool_backward(pooled, w, f.shape());
  auto loss = [&](std::span<const double> v) {
    const Tensor ff(f.shape(), std::vector<double>(v.begin(), v.end()));
    const Tensor y = ta::roi_pool_baseline(ff, Quadrilateral::rect(1, 1, 8, 6), 3, 2).tensor;
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
    return s;
  };
  EXPECT_TRUE(ts::ndops::grad_check(loss, f.data(), analytic.data()).passed);
}

TEST(PoolingMode, ParsesNames) {
  EXPECT_EQ(ta::parse_pooling_mode("roi"), ta::PoolingMode::kRoiPool);
  EXPECT_EQ(ta::parse_pooling_mode("roialign"), ta::PoolingMode::kRoiAlign);
  EXPECT_EQ(ta::parse_pooling_mode("textalign"), ta::PoolingMode::kTextAlign);
  EXPECT_THROW(ta::parse_pooling_mode("warp"), ts::ConfigError);
}
