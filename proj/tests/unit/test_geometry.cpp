// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "geometry_fixtures.hpp"
#include "oracles.hpp"
#include "textspotter/geometry/quad.hpp"

namespace ts = textspotter;
using ts::geometry::Point;
using ts::geometry::Quadrilateral;
using ts::geometry::RBox;
using ts::geometry::ScoredQuad;
using fixtures::nms_oracle;
using fixtures::random_convex;
using fixtures::to_p2;

namespace {

constexpr double kPi = std::numbers::pi;

void expect_point_near(Point a, Point b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
}

}  // namespace

// --------------------------------------------------------------------------
// Quadrilateral

TEST(Quadrilateral, RejectsNonConvexAndNonFinite) {
  EXPECT_THROW(Quadrilateral({0, 0}, {4, 0}, {1, 1}, {0, 4}), ts::ContractError);
  EXPECT_THROW(Quadrilateral({0, 0}, {4, 4}, {4, 0}, {0, 4}), ts::ContractError);  // bow tie
  EXPECT_THROW(Quadrilateral({0, 0}, {NAN, 0}, {1, 1}, {0, 1}), ts::ContractError);
}

TEST(Quadrilateral, TextFormRoundTrips) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const Quadrilateral q = random_convex(rng);
    EXPECT_EQ(ts::geometry::parse_quad(q.to_string()), q);
  }
  std::string_view rest;
  const auto q = ts::geometry::parse_quad("0,0,2,0,2,1,0,1,0.75,HELLO", &rest);
  EXPECT_EQ(q, Quadrilateral::rect(0, 0, 2, 1));
  EXPECT_EQ(rest, "0.75,HELLO");
  EXPECT_THROW(ts::geometry::parse_quad("0,0,2,0,2"), ts::ConfigError);
}

// --------------------------------------------------------------------------
// decode_rbox

TEST(DecodeRBox, AxisAlignedSquare) {
  const auto q = ts::geometry::decode_rbox({{5, 5}, 2, 2, 2, 2, 0.0});
  expect_point_near(q[0], {3, 3}, 1e-15);
  expect_point_near(q[1], {7, 3}, 1e-15);
  expect_point_near(q[2], {7, 7}, 1e-15);
  expect_point_near(q[3], {3, 7}, 1e-15);
}

TEST(DecodeRBox, QuarterTurnMatchesRotationMatrix) {
  const RBox r{{0, 0}, 1, 1, 2, 2, kPi / 2};
  const auto q = ts::geometry::decode_rbox(r);
  const std::array<Point, 4> flat{Point{-2, -1}, Point{2, -1}, Point{2, 1}, Point{-2, 1}};
  const double c = std::cos(kPi / 2), s = std::sin(kPi / 2);
  for (std::size_t i = 0; i < 4; ++i) {
    expect_point_near(q[i], {c * flat[i].x - s * flat[i].y, s * flat[i].x + c * flat[i].y},
                      1e-15);
  }
}

TEST(DecodeRBox, ZeroAreaBoxIsFlaggedNotThrown) {
  const auto q = ts::geometry::decode_rbox({{1, 1}, 0, 0, 2, 3, 0.3});
  EXPECT_TRUE(q.degenerate());
  EXPECT_EQ(ts::geometry::quad_area(q), 0.0);
}

TEST(DecodeRBox, RoundTripIsIdentity) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(0.0, 20.0), pos(-50, 50), ang(-kPi / 2, kPi / 2);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    RBox r{{pos(rng), pos(rng)}, d(rng), d(rng), d(rng), d(rng), ang(rng)};
    if (r.angle == -kPi / 2) continue;
    r.top += 0.1;
    r.left += 0.1;
    const auto back = ts::geometry::encode_rbox(ts::geometry::decode_rbox(r), r.anchor);
    for (double e : {back.top - r.top, back.bottom - r.bottom, back.left - r.left,
                     back.right - r.right, back.angle - r.angle}) {
      worst = std::max(worst, std::abs(e));
    }
  }
  EXPECT_LT(worst, 1e-9);
}

// --------------------------------------------------------------------------
// quad_area / quad_iou

TEST(QuadArea, UnitSquareAndCollinear) {
  EXPECT_DOUBLE_EQ(ts::geometry::quad_area(Quadrilateral::rect(0, 0, 1, 1)), 1.0);
  const Quadrilateral line({0, 0}, {1, 1}, {2, 2}, {3, 3});
  EXPECT_TRUE(line.degenerate());
  EXPECT_EQ(ts::geometry::quad_area(line), 0.0);
}

TEST(QuadArea, MatchesMonteCarlo) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5; ++i) {
    const auto q = random_convex(rng, 0.0);
    const double mc = oracle::mc_area(to_p2(q), 1'000'000, 100 + i);
    EXPECT_NEAR(ts::geometry::quad_area(q), mc, 1e-2 * mc);  // relative
  }
}

TEST(QuadIou, IdenticalAndHalfOffset) {
  const auto a = Quadrilateral::rect(0, 0, 1, 1);
  EXPECT_DOUBLE_EQ(ts::geometry::quad_iou(a, a), 1.0);
  EXPECT_NEAR(ts::geometry::quad_iou(a, Quadrilateral::rect(0.5, 0, 1.5, 1)), 1.0 / 3.0, 1e-15);
}

TEST(QuadIou, DegenerateInputsGiveZero) {
  const Quadrilateral line({0, 0}, {1, 0}, {2, 0}, {3, 0});
  EXPECT_EQ(ts::geometry::quad_iou(line, line), 0.0);
  EXPECT_EQ(ts::geometry::quad_iou(line, Quadrilateral::rect(0, 0, 1, 1)), 0.0);
}

TEST(QuadIou, OrientationOfCornerListDoesNotMatter) {
  const auto a = Quadrilateral::rect(0, 0, 2, 2);
  const Quadrilateral ccw({0, 0}, {0, 2}, {2, 2}, {2, 0});
  EXPECT_DOUBLE_EQ(ts::geometry::quad_iou(a, ccw), 1.0);
}

TEST(QuadIou, SymmetricBoundedAndReflexive) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_convex(rng, 4.0), b = random_convex(rng, 4.0);
    const double ab = ts::geometry::quad_iou(a, b), ba = ts::geometry::quad_iou(b, a);
    EXPECT_NEAR(ab, ba, 1e-12);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_NEAR(ts::geometry::quad_iou(a, a), 1.0, 1e-12);
  }
}

TEST(QuadIou, MatchesMonteCarloOnRandomPairs) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    const auto a = random_convex(rng, 2.0), b = random_convex(rng, 2.0);
    const double mc = oracle::mc_iou(to_p2(a), to_p2(b), 1'000'000, 500 + i);
    EXPECT_NEAR(ts::geometry::quad_iou(a, b), mc, 5e-3);
  }
}

// --------------------------------------------------------------------------
// nms

TEST(Nms, KeepsHigherScoreOfOverlappingPair) {
  const auto a = Quadrilateral::rect(0, 0, 10, 10);
  const auto b = Quadrilateral::rect(0, 0, 10, 8);  // IoU 0.8
  ASSERT_NEAR(ts::geometry::quad_iou(a, b), 0.8, 1e-12);
  const auto kept = ts::geometry::nms({{b, 0.7}, {a, 0.9}}, 0.5);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].score, 0.9);
}

TEST(Nms, DisjointBoxesBothKept) {
  const auto kept = ts::geometry::nms(
      {{Quadrilateral::rect(0, 0, 1, 1), 0.4}, {Quadrilateral::rect(5, 5, 6, 6), 0.6}}, 0.3);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].score, 0.6);
}

TEST(Nms, EmptyInputAndBadThreshold) {
  EXPECT_TRUE(ts::geometry::nms({}, 0.3).empty());
  EXPECT_THROW(ts::geometry::nms({}, 0.0), ts::ContractError);
  EXPECT_THROW(ts::geometry::nms({}, 1.0), ts::ContractError);
}

TEST(Nms, MatchesBruteForceOracle) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> score(0.0, 1.0), thr(0.1, 0.7);
  std::uniform_int_distribution<int> coarse(0, 4);
  for (int inst = 0; inst < 200; ++inst) {
    std::vector<ScoredQuad> boxes;
    for (int i = 0; i < 10; ++i) {
      // Coarse scores on some instances force the tie rule to matter.
      const double s = inst % 2 ? coarse(rng) / 4.0 : score(rng);
      boxes.push_back({random_convex(rng, 3.0), s});
    }
    const double t = thr(rng);
    const auto got = ts::geometry::nms(boxes, t);
    const auto want = nms_oracle(boxes, t);
    ASSERT_EQ(got.size(), want.size()) << "instance " << inst;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].quad, want[i].quad);
      EXPECT_EQ(got[i].score, want[i].score);
    }
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (i) {
        EXPECT_GE(got[i - 1].score, got[i].score);
      }
      for (std::size_t j = i + 1; j < got.size(); ++j) {
        EXPECT_LE(ts::geometry::quad_iou(got[i].quad, got[j].quad), t);
      }
    }
  }
}

TEST(Nms, TieRuleMakesOutputOrderIndependent) {
  std::mt19937_64 rng(7);
  std::vector<ScoredQuad> boxes;
  for (int i = 0; i < 8; ++i) boxes.push_back({random_convex(rng, 2.0), 0.5});
  const auto ref = ts::geometry::nms(boxes, 0.3);
  for (int k = 0; k < 20; ++k) {
    std::shuffle(boxes.begin(), boxes.end(), rng);
    const auto got = ts::geometry::nms(boxes, 0.3);
    ASSERT_EQ(got.size(), ref.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].quad, ref[i].quad);
  }
}

// --------------------------------------------------------------------------
// project_onto_axis

TEST(ProjectOntoAxis, AxisAlignedProjectsToX) {
  const auto q = Quadrilateral::rect(3, 4, 10, 8);
  EXPECT_DOUBLE_EQ(ts::geometry::project_onto_axis({7.5, 100}, q), 4.5);
}

TEST(ProjectOntoAxis, QuarterTurnProjectsToY) {
  const auto q = ts::geometry::decode_rbox({{0, 0}, 1, 1, 3, 3, kPi / 2});
  const Point p = q[0] + Point{0, 2.5};
  EXPECT_NEAR(ts::geometry::project_onto_axis(p, q), 2.5, 1e-12);
}

TEST(ProjectOntoAxis, FortyFiveDegreesIsUnitVectorDot) {
  const auto q = ts::geometry::decode_rbox({{2, 1}, 1, 1, 3, 3, kPi / 4});
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 100; ++i) {
    const Point p{u(rng), u(rng)};
    const double want = (p.x - q[0].x) * std::cos(kPi / 4) + (p.y - q[0].y) * std::sin(kPi / 4);
    EXPECT_NEAR(ts::geometry::project_onto_axis(p, q), want, 1e-12);
  }
}

TEST(ProjectOntoAxis, DegenerateQuadThrows) {
  const Quadrilateral line({0, 0}, {1, 0}, {2, 0}, {3, 0});
  EXPECT_THROW(ts::geometry::project_onto_axis({0, 0}, line), ts::ContractError);
}
