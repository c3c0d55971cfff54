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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "plume/networks.hpp"
#include "plume/postproc.hpp"
#include "plume/tensor.hpp"
#include "plume/voxel_grid.hpp"

namespace plume {

// Probabilities are clamped to [kProbEpsilon, 1 - kProbEpsilon] before logs.
inline constexpr double kProbEpsilon = 1e-7;

// ---- scalar reference forms ----------------------------------------------------

// -[y log p + (1 - y) log(1 - p)] with p clamped.
double bce(double p, double y);
// -alpha (1-p)^gamma log p for c = 1, -(1-alpha) p^gamma log(1-p) for c = 0.
double focal(double p, int c, double alpha = 0.25, double gamma = 2.0);

enum class SmoothL1Mode {
  kPaperLiteral,   // 0.5|x| below 0.5, |x| - 0.5 otherwise
  kHuberBeta05,    // x^2 below 0.5, |x| - 0.25 otherwise
};
double smooth_l1(double x, SmoothL1Mode mode = SmoothL1Mode::kHuberBeta05);
double smooth_l1_derivative(double x, SmoothL1Mode mode = SmoothL1Mode::kHuberBeta05);

// ---- occupancy loss -------------------------------------------------------------

// Mean BCE over voxels with fov_mask set. probs: [X, Y, Z]. Returns 0 with
// zero gradients when no voxel is visible.
Tensor occupancy_bce(const Tensor& probs, const OccupancyGrid& labels);
// Same loss from logits without the probability clamp (numerically stable).
Tensor occupancy_bce_logits(const Tensor& logits, const OccupancyGrid& labels);

// ---- detection loss -------------------------------------------------------------

struct DetectionTargets {
  std::size_t rows = 0;  // along X
  std::size_t cols = 0;  // along Z
  std::size_t stride = 4;
  std::vector<std::uint8_t> positive;  // rows * cols
  std::vector<double> regression;      // [6, rows, cols]: du, dv, log w, log h, sin, cos
  std::vector<int> box_index;          // assigned box per positive cell, -1 elsewhere
  std::size_t positive_count = 0;
};

// A cell is positive when its center lies inside a box; cells inside several
// boxes take the one with the nearest center (ties by u, then v).
DetectionTargets encode_detection_targets(std::span<const BevBox> boxes, const VoxelGridSpec& grid,
                                          std::size_t stride = 4);

// Focal loss summed over cells from logits [1, A, B], divided by `normalizer`.
Tensor focal_loss_logits(const Tensor& logits, std::span<const std::uint8_t> targets, double normalizer,
                         double alpha = 0.25, double gamma = 2.0);
// Smooth-L1 over all channels of masked cells, divided by `normalizer`.
// pred: [6, A, B]; target laid out like DetectionTargets::regression.
Tensor smooth_l1_loss(const Tensor& pred, std::span<const double> target, std::span<const std::uint8_t> mask,
                      double normalizer, SmoothL1Mode mode = SmoothL1Mode::kHuberBeta05);

struct LossOptions {
  double alpha = 0.25;
  double gamma = 2.0;
  SmoothL1Mode smooth_l1 = SmoothL1Mode::kHuberBeta05;
};

struct LossReport {
  Tensor total;  // differentiable scalar of the loss being optimised
  double depth_loss = 0.0;
  double focal_loss = 0.0;
  double regression_loss = 0.0;
  double detection_loss = 0.0;
  std::size_t visible_voxels = 0;
  std::size_t positive_cells = 0;
  std::size_t total_cells = 0;
};

// Focal over all cells normalised by max(1, positives) plus smooth-L1 summed
// over the six channels and averaged over positives.
LossReport detection_loss(const DenseDetections& pred, const DetectionTargets& targets,
                          const LossOptions& options = {});
LossReport occupancy_loss(const Tensor& logits, const OccupancyGrid& labels);

}  // namespace plume
