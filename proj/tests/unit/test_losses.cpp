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
#include "plume/losses.hpp"
#include "plume/ops.hpp"

namespace plume {
namespace {

OccupancyGrid grid_with(std::vector<double> labels, std::vector<std::uint8_t> mask) {
  OccupancyGrid g;
  g.spec.x_range = {0, 1};
  g.spec.y_range = {0, 1};
  g.spec.z_range = {0, static_cast<double>(labels.size())};
  g.spec.resolution = 1;
  g.dims = {1, 1, labels.size()};
  g.values = std::move(labels);
  g.fov_mask = std::move(mask);
  return g;
}

double logit(double p) { return std::log(p / (1 - p)); }

TEST(Losses, UniformPredictionGivesLn2) {
  const OccupancyGrid labels = grid_with({1, 0, 1, 1}, {1, 1, 1, 1});
  const Tensor probs(Shape{1, 1, 4}, 0.5);
  EXPECT_NEAR(occupancy_bce(probs, labels).item(), std::numbers::ln2, 1e-15);
  EXPECT_NEAR(occupancy_bce_logits(Tensor(Shape{1, 1, 4}, 0.0), labels).item(), std::numbers::ln2, 1e-15);
}

TEST(Losses, SingleVoxelHandValue) {
  const OccupancyGrid labels = grid_with({1, 0}, {1, 0});
  const Tensor probs(Shape{1, 1, 2}, std::vector<double>{0.9, 0.3});
  EXPECT_NEAR(occupancy_bce(probs, labels).item(), -std::log(0.9), 1e-15);
  EXPECT_NEAR(-std::log(0.9), 0.105361, 1e-6);
}

TEST(Losses, GradientAtHalfForPositive) {
  const OccupancyGrid labels = grid_with({1}, {1});
  Tensor probs(Shape{1, 1, 1}, 0.5);
  probs.set_requires_grad();
  backward(occupancy_bce(probs, labels));
  EXPECT_DOUBLE_EQ(probs.grad()[0], -2.0);
}

TEST(Losses, MaskedVoxelsContributeNothing) {
  std::mt19937_64 rng(1);
  std::vector<double> y(50), p(50);
  std::vector<std::uint8_t> mask(50);
  for (std::size_t i = 0; i < 50; ++i) {
    y[i] = rng() % 2;
    p[i] = oracle::uniform(rng, 0.01, 0.99);
    mask[i] = rng() % 3 != 0;
  }
  const OccupancyGrid labels = grid_with(y, mask);
  Tensor probs(Shape{1, 1, 50}, p);
  probs.set_requires_grad();
  const double loss = occupancy_bce(probs, labels).item();
  backward(occupancy_bce(probs, labels));
  double expected = 0;
  std::size_t visible = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    if (!mask[i]) {
      EXPECT_EQ(probs.grad()[i], 0.0);
      continue;
    }
    expected += bce(p[i], y[i]);
    ++visible;
  }
  EXPECT_NEAR(loss, expected / static_cast<double>(visible), 1e-14);
  // Changing a masked label or prediction leaves the loss untouched.
  OccupancyGrid flipped = labels;
  for (std::size_t i = 0; i < 50; ++i) {
    if (!mask[i]) flipped.values[i] = 1 - flipped.values[i];
  }
  EXPECT_EQ(occupancy_bce(probs.detach(), flipped).item(), loss);
}

TEST(Losses, AllMaskedIsZeroWithZeroGradient) {
  const OccupancyGrid labels = grid_with({1, 0, 1}, {0, 0, 0});
  Tensor logits(Shape{1, 1, 3}, std::vector<double>{2, -1, 0.5});
  logits.set_requires_grad();
  Tensor loss = occupancy_bce_logits(logits, labels);
  EXPECT_EQ(loss.item(), 0.0);
  backward(loss);
  for (double g : logits.grad()) EXPECT_EQ(g, 0.0);
}

TEST(Losses, LogitAndProbabilityFormsAgree) {
  std::mt19937_64 rng(2);
  std::vector<double> y(40), x(40), p(40);
  for (std::size_t i = 0; i < 40; ++i) {
    y[i] = rng() % 2;
    x[i] = oracle::uniform(rng, -6, 6);
    p[i] = 1 / (1 + std::exp(-x[i]));
  }
  const OccupancyGrid labels = grid_with(y, std::vector<std::uint8_t>(40, 1));
  EXPECT_NEAR(occupancy_bce(Tensor(Shape{1, 1, 40}, p), labels).item(),
              occupancy_bce_logits(Tensor(Shape{1, 1, 40}, x), labels).item(), 1e-12);
}

TEST(Losses, BceNonNegative) {
  std::mt19937_64 rng(3);
  for (int n = 0; n < 1000; ++n) EXPECT_GE(bce(oracle::uniform(rng, 0, 1), rng() % 2), 0.0);
  EXPECT_GT(bce(1.0, 1), 0.0);
  EXPECT_LT(bce(1.0, 1), 1e-6);
}

TEST(Losses, FocalReducesToHalfBce) {
  std::mt19937_64 rng(4);
  for (int n = 0; n < 10000; ++n) {
    const double p = oracle::uniform(rng, 0, 1);
    const int c = static_cast<int>(rng() % 2);
    EXPECT_NEAR(focal(p, c, 0.5, 0.0), 0.5 * bce(p, c), 1e-12);
  }
}

TEST(Losses, FocalHandValueAndLimit) {
  EXPECT_NEAR(focal(0.5, 1), 0.25 * 0.25 * std::numbers::ln2, 1e-15);
  EXPECT_NEAR(focal(0.5, 1), 0.043322, 1e-6);
  EXPECT_LT(focal(1 - 1e-9, 1), 1e-20);
}

TEST(Losses, FocalLogitsMatchScalarForm) {
  std::mt19937_64 rng(5);
  std::vector<double> x(30);
  std::vector<std::uint8_t> t(30);
  double expected = 0;
  for (std::size_t i = 0; i < 30; ++i) {
    x[i] = oracle::uniform(rng, -4, 4);
    t[i] = rng() % 2;
    expected += focal(1 / (1 + std::exp(-x[i])), t[i]);
  }
  EXPECT_NEAR(focal_loss_logits(Tensor(Shape{1, 5, 6}, x), t, 3.0).item(), expected / 3.0, 1e-12);
}

TEST(Losses, SmoothL1Values) {
  EXPECT_EQ(smooth_l1(0.0, SmoothL1Mode::kPaperLiteral), 0.0);
  EXPECT_EQ(smooth_l1(0.0, SmoothL1Mode::kHuberBeta05), 0.0);
  EXPECT_EQ(smooth_l1(0.4, SmoothL1Mode::kPaperLiteral), 0.2);
  EXPECT_EQ(smooth_l1(2.0, SmoothL1Mode::kPaperLiteral), 1.5);
  EXPECT_EQ(smooth_l1(-2.0, SmoothL1Mode::kPaperLiteral), 1.5);
  EXPECT_NEAR(smooth_l1(std::nextafter(0.5, 0.0), SmoothL1Mode::kPaperLiteral), 0.25, 1e-15);
  EXPECT_EQ(smooth_l1(0.5, SmoothL1Mode::kPaperLiteral), 0.0);
}

TEST(Losses, HuberContinuousAtJoin) {
  const double below = std::nextafter(0.5, 0.0);
  EXPECT_NEAR(smooth_l1(below), smooth_l1(0.5), 1e-15);
  EXPECT_NEAR(smooth_l1_derivative(below), 1.0, 1e-15);
  EXPECT_EQ(smooth_l1_derivative(0.5), 1.0);
  EXPECT_EQ(smooth_l1_derivative(-0.7), -1.0);
  for (double x = -3; x <= 3; x += 0.013) {
    const double h = 1e-6;
    if (std::abs(std::abs(x) - 0.5) < 2 * h) continue;
    EXPECT_NEAR((smooth_l1(x + h) - smooth_l1(x - h)) / (2 * h), smooth_l1_derivative(x), 1e-8);
  }
}

VoxelGridSpec bev_grid() {
  VoxelGridSpec g;
  g.x_range = {-8, 8};
  g.y_range = {0, 1};
  g.z_range = {2, 18};
  g.resolution = 0.5;
  return g;
}

std::vector<BevBox> sample_boxes() {
  BevBox a;
  a.u = -3.1;
  a.v = 7.3;
  a.w = 1.7;
  a.h = 4.0;
  a.theta = 0.4;
  BevBox b = a;
  b.u = 2.6;
  b.v = 12.2;
  b.theta = -2.3;
  return {a, b};
}

TEST(Targets, CenteredBoxHasZeroOffsets) {
  const VoxelGridSpec g = bev_grid();
  const auto c = cell_center(g, 4, 3, 5);
  BevBox box;
  box.u = c[0];
  box.v = c[1];
  box.w = 0.5;
  box.h = 0.5;
  const std::vector<BevBox> boxes{box};
  const DetectionTargets t = encode_detection_targets(boxes, g, 4);
  const std::size_t cell = 3 * t.cols + 5;
  ASSERT_TRUE(t.positive[cell]);
  EXPECT_EQ(t.positive_count, 1u);
  const std::size_t plane = t.rows * t.cols;
  EXPECT_EQ(t.regression[cell], 0.0);
  EXPECT_EQ(t.regression[plane + cell], 0.0);
  EXPECT_EQ(t.regression[4 * plane + cell], 0.0);
  EXPECT_EQ(t.regression[5 * plane + cell], 1.0);
}

TEST(Targets, DecodeInvertsEncode) {
  const VoxelGridSpec g = bev_grid();
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<BevBox> boxes;
    for (int n = 0; n < 3; ++n) {
      BevBox b = oracle::random_box(rng, 1.0);
      b.u += oracle::uniform(rng, -6, 6);
      b.v += oracle::uniform(rng, 5, 15);
      boxes.push_back(b);
    }
    const DetectionTargets t = encode_detection_targets(boxes, g, 4);
    std::vector<double> logits(t.rows * t.cols);
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] = t.positive[i] ? 10.0 : -10.0;
    const auto decoded = decode_boxes(Tensor(Shape{1, t.rows, t.cols}, logits),
                                      Tensor(Shape{6, t.rows, t.cols}, t.regression), g, 4, 0.5);
    ASSERT_EQ(decoded.size(), t.positive_count);
    std::size_t n = 0;
    for (std::size_t cell = 0; cell < logits.size(); ++cell) {
      if (!t.positive[cell]) continue;
      const BevBox& src = boxes[static_cast<std::size_t>(t.box_index[cell])];
      const BevBox& d = decoded[n++];
      EXPECT_NEAR(d.u, src.u, 1e-9);
      EXPECT_NEAR(d.v, src.v, 1e-9);
      EXPECT_NEAR(d.w, src.w, 1e-9);
      EXPECT_NEAR(d.h, src.h, 1e-9);
      EXPECT_NEAR(std::remainder(d.theta - src.theta, 2 * std::numbers::pi), 0.0, 1e-9);
      EXPECT_TRUE(src.contains(cell_center(g, 4, cell / t.cols, cell % t.cols)[0],
                               cell_center(g, 4, cell / t.cols, cell % t.cols)[1]));
    }
  }
}

DenseDetections perfect_prediction(const DetectionTargets& t) {
  std::vector<double> logits(t.rows * t.cols);
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] = t.positive[i] ? 40.0 : -40.0;
  return {Tensor(Shape{1, t.rows, t.cols}, logits), Tensor(Shape{6, t.rows, t.cols}, t.regression)};
}

TEST(DetectionLoss, PerfectPredictionNearZero) {
  const DetectionTargets t = encode_detection_targets(sample_boxes(), bev_grid(), 4);
  ASSERT_GT(t.positive_count, 0u);
  const LossReport r = detection_loss(perfect_prediction(t), t);
  EXPECT_LT(r.detection_loss, 1e-3);
  EXPECT_EQ(r.regression_loss, 0.0);
}

TEST(DetectionLoss, ReportIsAdditive) {
  const DetectionTargets t = encode_detection_targets(sample_boxes(), bev_grid(), 4);
  std::mt19937_64 rng(7);
  std::vector<double> logits(t.rows * t.cols), reg(6 * t.rows * t.cols);
  for (double& v : logits) v = oracle::uniform(rng, -3, 3);
  for (double& v : reg) v = oracle::uniform(rng, -1, 1);
  const LossReport r = detection_loss({Tensor(Shape{1, t.rows, t.cols}, logits), Tensor(Shape{6, t.rows, t.cols}, reg)}, t);
  EXPECT_NEAR(r.detection_loss, r.focal_loss + r.regression_loss, 1e-12);
  EXPECT_NEAR(r.total.item(), r.detection_loss, 1e-12);
  EXPECT_GT(r.regression_loss, 0.0);
  EXPECT_EQ(r.positive_cells, t.positive_count);
}

TEST(DetectionLoss, NoBoxesMeansFocalOnNegatives) {
  const DetectionTargets t = encode_detection_targets({}, bev_grid(), 4);
  EXPECT_EQ(t.positive_count, 0u);
  std::vector<double> logits(t.rows * t.cols, -1.0);
  const LossReport r = detection_loss({Tensor(Shape{1, t.rows, t.cols}, logits), Tensor(Shape{6, t.rows, t.cols}, 0.0)}, t);
  EXPECT_EQ(r.regression_loss, 0.0);
  const double p = 1 / (1 + std::exp(1.0));
  EXPECT_NEAR(r.focal_loss, static_cast<double>(t.rows * t.cols) * focal(p, 0), 1e-10);
}

TEST(DetectionLoss, InvariantToBoxOrder) {
  auto boxes = sample_boxes();
  const DetectionTargets a = encode_detection_targets(boxes, bev_grid(), 4);
  std::swap(boxes[0], boxes[1]);
  const DetectionTargets b = encode_detection_targets(boxes, bev_grid(), 4);
  std::mt19937_64 rng(8);
  std::vector<double> logits(a.rows * a.cols), reg(6 * a.rows * a.cols);
  for (double& v : logits) v = oracle::uniform(rng, -3, 3);
  for (double& v : reg) v = oracle::uniform(rng, -1, 1);
  const DenseDetections pred{Tensor(Shape{1, a.rows, a.cols}, logits), Tensor(Shape{6, a.rows, a.cols}, reg)};
  EXPECT_EQ(detection_loss(pred, a).detection_loss, detection_loss(pred, b).detection_loss);
}

TEST(DetectionLoss, ShapeMismatchThrows) {
  const DetectionTargets t = encode_detection_targets(sample_boxes(), bev_grid(), 4);
  const DenseDetections wrong{Tensor(Shape{1, t.rows + 1, t.cols}, 0.0), Tensor(Shape{6, t.rows + 1, t.cols}, 0.0)};
  EXPECT_THROW(detection_loss(wrong, t), Error);
}

}  // namespace
}  // namespace plume
