// Copyright 2026 The plume Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "../support/oracles.hpp"
#include "plume/error.hpp"
#include "plume/postproc.hpp"

namespace plume {
namespace {

BevBox box(double u, double v, double w, double h, double theta = 0, double score = 0) {
  BevBox b;
  b.u = u;
  b.v = v;
  b.w = w;
  b.h = h;
  b.theta = theta;
  b.score = score;
  return b;
}

TEST(Iou, IdenticalAndDisjoint) {
  const BevBox a = box(1, 2, 1.5, 4, 0.3);
  EXPECT_NEAR(rotated_iou(a, a), 1.0, 1e-12);
  EXPECT_EQ(rotated_iou(a, box(10, 2, 1.5, 4, 0.3)), 0.0);
}

TEST(Iou, FortyFiveDegreeUnitSquare) {
  const double s = std::sqrt(2.0);
  const double octagon = 2 * (s - 1);  // intersection area
  const double expected = octagon / (2 - octagon);
  const double iou = rotated_iou(box(0, 0, 1, 1), box(0, 0, 1, 1, std::numbers::pi / 4));
  EXPECT_NEAR(iou, expected, 1e-12);
  EXPECT_NEAR(iou, 0.70711, 1e-5);
}

TEST(Iou, AxisAlignedClosedForm) {
  std::mt19937_64 rng(1);
  for (int n = 0; n < 1000; ++n) {
    BevBox a = oracle::random_box(rng), b = oracle::random_box(rng);
    a.theta = b.theta = 0;
    EXPECT_NEAR(rotated_iou(a, b), oracle::axis_aligned_iou(a, b), 1e-12);
  }
}

TEST(Iou, SymmetricAndRigidInvariant) {
  std::mt19937_64 rng(2);
  for (int n = 0; n < 500; ++n) {
    const BevBox a = oracle::random_box(rng), b = oracle::random_box(rng);
    const double base = rotated_iou(a, b);
    EXPECT_NEAR(rotated_iou(b, a), base, 1e-12);
    const double phi = oracle::uniform(rng, -3, 3);
    const double tu = oracle::uniform(rng, -50, 50), tv = oracle::uniform(rng, -50, 50);
    auto move = [&](BevBox x) {
      const double u = std::cos(phi) * x.u - std::sin(phi) * x.v + tu;
      const double v = std::sin(phi) * x.u + std::cos(phi) * x.v + tv;
      x.u = u;
      x.v = v;
      x.theta = normalize_angle(x.theta + phi);
      return x;
    };
    EXPECT_NEAR(rotated_iou(move(a), move(b)), base, 1e-9);
  }
}

TEST(Iou, MonteCarloAgreement) {
  std::mt19937_64 rng(3);
  for (int n = 0; n < 20; ++n) {
    const BevBox a = oracle::random_box(rng, 1.0), b = oracle::random_box(rng, 1.0);
    EXPECT_NEAR(rotated_iou(a, b), oracle::monte_carlo_iou(a, b, 300, rng), 0.005);
  }
}

TEST(Iou, DegenerateBoxThrows) {
  try {
    rotated_iou(box(0, 0, 0, 1), box(0, 0, 1, 1));
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateBox);
  }
}

TEST(Geometry2d, CornersAndContainment) {
  const BevBox b = box(0, 0, 2, 4, std::numbers::pi / 2);
  const auto c = b.corners();
  // local (-1, -2) rotated by +90 degrees -> (2, -1)
  EXPECT_NEAR(c[0][0], 2, 1e-12);
  EXPECT_NEAR(c[0][1], -1, 1e-12);
  EXPECT_NEAR(polygon_area(c), 8, 1e-12);
  EXPECT_TRUE(b.contains(1.9, 0.9));
  EXPECT_FALSE(b.contains(0.5, 1.5));
  EXPECT_NEAR(normalize_angle(std::numbers::pi), -std::numbers::pi, 1e-15);
  EXPECT_NEAR(normalize_angle(7.0), 7.0 - 2 * std::numbers::pi, 1e-15);
}

TEST(Decode, ZeroRegressionGivesUnitBoxAtCell) {
  VoxelGridSpec g;
  g.x_range = {-4, 4};
  g.z_range = {0, 8};
  g.resolution = 0.5;
  const auto dims = detection_map_dims(g, 4);
  ASSERT_EQ(dims, (std::array<std::size_t, 2>{4, 4}));
  std::vector<double> logits(16, -5.0);
  logits[6] = 2.0;
  const auto boxes = decode_boxes(Tensor(Shape{1, 4, 4}, logits), Tensor(Shape{6, 4, 4}, 0.0), g, 4, 0.5);
  ASSERT_EQ(boxes.size(), 1u);
  const auto c = cell_center(g, 4, 1, 2);
  EXPECT_EQ(boxes[0].u, c[0]);
  EXPECT_EQ(boxes[0].v, c[1]);
  EXPECT_EQ(c[0], -4 + 1.5 * 2);
  EXPECT_EQ(boxes[0].w, 1.0);
  EXPECT_EQ(boxes[0].h, 1.0);
  EXPECT_EQ(boxes[0].theta, 0.0);
  EXPECT_NEAR(boxes[0].score, 1 / (1 + std::exp(-2.0)), 1e-15);
  EXPECT_TRUE(decode_boxes(Tensor(Shape{1, 4, 4}, logits), Tensor(Shape{6, 4, 4}, 0.0), g, 4, 1.0).empty());
  EXPECT_THROW(decode_boxes(Tensor(Shape{1, 4, 4}, logits), Tensor(Shape{6, 4, 3}, 0.0), g, 4, 0.5), Error);
}

TEST(Nms, Basics) {
  EXPECT_EQ(nms({box(0, 0, 1, 1, 0, 0.7)}, 0.5).size(), 1u);
  const auto kept = nms({box(0, 0, 1, 1, 0, 0.8), box(0, 0, 1, 1, 0, 0.9)}, 0.5);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].score, 0.9);
}

TEST(Nms, MatchesReference) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<BevBox> boxes;
    for (int n = 0; n < 50; ++n) {
      BevBox b = oracle::random_box(rng, 4.0);
      // Coarse scores so ties occur.
      b.score = std::round(oracle::uniform(rng, 0, 1) * 20) / 20;
      boxes.push_back(b);
    }
    const double thr = oracle::uniform(rng, 0.1, 0.7);
    const auto kept = nms(boxes, thr);
    const auto ref = oracle::nms_reference(boxes, thr, rotated_iou);
    ASSERT_EQ(kept.size(), ref.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      EXPECT_EQ(kept[i].u, ref[i].u);
      EXPECT_EQ(kept[i].score, ref[i].score);
    }
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (i > 0) EXPECT_GE(kept[i - 1].score, kept[i].score);
      for (std::size_t j = i + 1; j < kept.size(); ++j) EXPECT_LE(rotated_iou(kept[i], kept[j]), thr);
    }
  }
}

TEST(DetectionText, RoundTrip) {
  std::mt19937_64 rng(5);
  std::vector<BevBox> boxes;
  for (int n = 0; n < 20; ++n) {
    BevBox b = oracle::random_box(rng, 30);
    b.score = oracle::uniform(rng, 0, 1);
    b.class_id = n % 2;
    boxes.push_back(b);
  }
  const std::string text = format_detections(boxes);
  const auto back = parse_detections(text);
  ASSERT_EQ(back.size(), boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    EXPECT_NEAR(back[i].u, boxes[i].u, 1e-7 * std::max(1.0, std::abs(boxes[i].u)));
    EXPECT_NEAR(back[i].score, boxes[i].score, 1e-8);
    EXPECT_EQ(back[i].class_id, boxes[i].class_id);
  }
  // Nine significant digits are a fixed point of format -> parse.
  EXPECT_EQ(format_detections(back), text);
  try {
    parse_detections("0 1 2 3\n");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedLine);
  }
}

}  // namespace
}  // namespace plume
