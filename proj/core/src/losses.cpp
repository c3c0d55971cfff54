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

#include "plume/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "plume/error.hpp"
#include "plume/ops.hpp"

namespace plume {

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon); }

// log(1 + exp(x)) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

void check_grid_shape(const Tensor& t, const OccupancyGrid& labels) {
  require(t.shape() == Shape{labels.dims.x, labels.dims.y, labels.dims.z}, ErrorCode::kShapeMismatch,
          "occupancy prediction " + shape_to_string(t.shape()) + " does not match labels");
  require(labels.values.size() == labels.dims.count() && labels.fov_mask.size() == labels.dims.count(),
          ErrorCode::kShapeMismatch, "occupancy labels are inconsistent with their dims");
}

std::size_t visible_count(const OccupancyGrid& labels) {
  return static_cast<std::size_t>(std::count_if(labels.fov_mask.begin(), labels.fov_mask.end(),
                                                [](std::uint8_t m) { return m != 0; }));
}

}  // namespace

double bce(double p, double y) {
  const double q = clamp_prob(p);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

double focal(double p, int c, double alpha, double gamma) {
  const double q = clamp_prob(p);
  if (c == 1) return -alpha * std::pow(1.0 - q, gamma) * std::log(q);
  return -(1.0 - alpha) * std::pow(q, gamma) * std::log(1.0 - q);
}

double smooth_l1(double x, SmoothL1Mode mode) {
  const double a = std::abs(x);
  if (mode == SmoothL1Mode::kPaperLiteral) return a < 0.5 ? 0.5 * a : a - 0.5;
  return a < 0.5 ? x * x : a - 0.25;
}

double smooth_l1_derivative(double x, SmoothL1Mode mode) {
  const double a = std::abs(x);
  const double sign = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
  if (mode == SmoothL1Mode::kPaperLiteral) return a < 0.5 ? 0.5 * sign : sign;
  return a < 0.5 ? 2.0 * x : sign;
}

Tensor occupancy_bce(const Tensor& probs, const OccupancyGrid& labels) {
  check_grid_shape(probs, labels);
  const std::size_t n = visible_count(labels);
  const auto p = probs.data();
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (labels.fov_mask[i]) total += bce(p[i], labels.values[i]);
  }
  const double inv = n ? 1.0 / static_cast<double>(n) : 0.0;
  auto grid = std::make_shared<OccupancyGrid>(labels);
  return detail::make_result(Shape{1}, {total * inv}, {probs}, "occupancy_bce",
                             [grid, inv](const detail::TensorImpl& out) {
                               auto& in = *out.node->inputs[0];
                               auto g = in.grad_buffer();
                               const double go = out.grad[0] * inv;
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                 if (!grid->fov_mask[i]) continue;
                                 const double q = in.data[i];
                                 if (q < kProbEpsilon || q > 1.0 - kProbEpsilon) continue;  // clamp is flat
                                 const double y = grid->values[i];
                                 g[i] += go * (-(y / q) + (1.0 - y) / (1.0 - q));
                               }
                             });
}

Tensor occupancy_bce_logits(const Tensor& logits, const OccupancyGrid& labels) {
  check_grid_shape(logits, labels);
  const std::size_t n = visible_count(labels);
  const auto l = logits.data();
  double total = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (labels.fov_mask[i]) total += softplus(l[i]) - labels.values[i] * l[i];
  }
  const double inv = n ? 1.0 / static_cast<double>(n) : 0.0;
  auto grid = std::make_shared<OccupancyGrid>(labels);
  return detail::make_result(Shape{1}, {total * inv}, {logits}, "occupancy_bce_logits",
                             [grid, inv](const detail::TensorImpl& out) {
                               auto& in = *out.node->inputs[0];
                               auto g = in.grad_buffer();
                               const double go = out.grad[0] * inv;
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                 if (!grid->fov_mask[i]) continue;
                                 const double s = 1.0 / (1.0 + std::exp(-in.data[i]));
                                 g[i] += go * (s - grid->values[i]);
                               }
                             });
}

DetectionTargets encode_detection_targets(std::span<const BevBox> boxes, const VoxelGridSpec& grid,
                                          std::size_t stride) {
  const auto [rows, cols] = detection_map_dims(grid, stride);
  DetectionTargets t;
  t.rows = rows;
  t.cols = cols;
  t.stride = stride;
  const std::size_t plane = rows * cols;
  t.positive.assign(plane, 0);
  t.regression.assign(6 * plane, 0.0);
  t.box_index.assign(plane, -1);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const auto [cu, cv] = cell_center(grid, stride, i, j);
      int best = -1;
      double best_d2 = std::numeric_limits<double>::infinity();
      for (std::size_t b = 0; b < boxes.size(); ++b) {
        const BevBox& box = boxes[b];
        if (!box.contains(cu, cv)) continue;
        const double d2 = (box.u - cu) * (box.u - cu) + (box.v - cv) * (box.v - cv);
        const bool better = best < 0 || d2 < best_d2 ||
                            (d2 == best_d2 && (box.u < boxes[best].u ||
                                               (box.u == boxes[best].u && box.v < boxes[best].v)));
        if (better) {
          best = static_cast<int>(b);
          best_d2 = d2;
        }
      }
      if (best < 0) continue;
      const BevBox& box = boxes[best];
      const std::size_t c = i * cols + j;
      t.positive[c] = 1;
      t.box_index[c] = best;
      ++t.positive_count;
      t.regression[c] = box.u - cu;
      t.regression[plane + c] = box.v - cv;
      t.regression[2 * plane + c] = std::log(box.w);
      t.regression[3 * plane + c] = std::log(box.h);
      t.regression[4 * plane + c] = std::sin(box.theta);
      t.regression[5 * plane + c] = std::cos(box.theta);
    }
  }
  return t;
}

Tensor focal_loss_logits(const Tensor& logits, std::span<const std::uint8_t> targets, double normalizer, double alpha,
                         double gamma) {
  require(logits.numel() == targets.size(), ErrorCode::kShapeMismatch,
          "focal loss: " + std::to_string(logits.numel()) + " logits vs " + std::to_string(targets.size()) +
              " targets");
  require(normalizer > 0, ErrorCode::kInvalidConfig, "focal loss normalizer must be positive");
  const auto l = logits.data();
  double total = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    // log p = -softplus(-l), log(1 - p) = -softplus(l).
    const double p = 1.0 / (1.0 + std::exp(-l[i]));
    if (targets[i]) {
      total += alpha * std::pow(1.0 - p, gamma) * softplus(-l[i]);
    } else {
      total += (1.0 - alpha) * std::pow(p, gamma) * softplus(l[i]);
    }
  }
  std::vector<std::uint8_t> t(targets.begin(), targets.end());
  const double inv = 1.0 / normalizer;
  return detail::make_result(Shape{1}, {total * inv}, {logits}, "focal_loss",
                             [t = std::move(t), inv, alpha, gamma](const detail::TensorImpl& out) {
                               auto& in = *out.node->inputs[0];
                               auto g = in.grad_buffer();
                               const double go = out.grad[0] * inv;
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                 const double x = in.data[i];
                                 const double p = 1.0 / (1.0 + std::exp(-x));
                                 double d;
                                 if (t[i]) {
                                   // d/dx of alpha (1-p)^g softplus(-x)
                                   d = -alpha * (gamma * std::pow(1.0 - p, gamma) * p * softplus(-x) +
                                                std::pow(1.0 - p, gamma + 1.0));
                                 } else {
                                   // d/dx of (1-alpha) p^g softplus(x)
                                   d = (1.0 - alpha) * (gamma * std::pow(p, gamma) * (1.0 - p) * softplus(x) +
                                                        std::pow(p, gamma + 1.0));
                                 }
                                 g[i] += go * d;
                               }
                             });
}

Tensor smooth_l1_loss(const Tensor& pred, std::span<const double> target, std::span<const std::uint8_t> mask,
                      double normalizer, SmoothL1Mode mode) {
  require(pred.rank() == 3 && pred.numel() == target.size() && pred.dim(1) * pred.dim(2) == mask.size(),
          ErrorCode::kShapeMismatch, "smooth-L1: prediction " + shape_to_string(pred.shape()) +
                                         " does not match targets");
  require(normalizer > 0, ErrorCode::kInvalidConfig, "smooth-L1 normalizer must be positive");
  const std::size_t plane = mask.size();
  const auto p = pred.data();
  double total = 0.0;
  for (std::size_t c = 0; c < pred.dim(0); ++c) {
    for (std::size_t k = 0; k < plane; ++k) {
      if (mask[k]) total += smooth_l1(p[c * plane + k] - target[c * plane + k], mode);
    }
  }
  const double inv = 1.0 / normalizer;
  std::vector<double> tgt(target.begin(), target.end());
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  return detail::make_result(Shape{1}, {total * inv}, {pred}, "smooth_l1",
                             [tgt = std::move(tgt), m = std::move(m), inv, mode](const detail::TensorImpl& out) {
                               auto& in = *out.node->inputs[0];
                               auto g = in.grad_buffer();
                               const double go = out.grad[0] * inv;
                               const std::size_t plane = m.size();
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                 if (m[i % plane]) g[i] += go * smooth_l1_derivative(in.data[i] - tgt[i], mode);
                               }
                             });
}

LossReport detection_loss(const DenseDetections& pred, const DetectionTargets& targets, const LossOptions& options) {
  const Shape map{targets.rows, targets.cols};
  require(pred.class_logits.shape() == Shape{1, targets.rows, targets.cols} &&
              pred.regression.shape() == Shape{6, targets.rows, targets.cols},
          ErrorCode::kShapeMismatch,
          "detection maps " + shape_to_string(pred.class_logits.shape()) + "/" +
              shape_to_string(pred.regression.shape()) + " do not match targets " + shape_to_string(map));
  LossReport r;
  r.positive_cells = targets.positive_count;
  r.total_cells = targets.rows * targets.cols;
  const double norm = static_cast<double>(std::max<std::size_t>(1, targets.positive_count));
  Tensor focal_t = focal_loss_logits(pred.class_logits, targets.positive, norm, options.alpha, options.gamma);
  Tensor reg_t = smooth_l1_loss(pred.regression, targets.regression, targets.positive, norm, options.smooth_l1);
  r.focal_loss = focal_t.item();
  r.regression_loss = reg_t.item();
  r.total = ops::add(focal_t, reg_t);
  r.detection_loss = r.total.item();
  return r;
}

LossReport occupancy_loss(const Tensor& logits, const OccupancyGrid& labels) {
  LossReport r;
  r.total = occupancy_bce_logits(logits, labels);
  r.depth_loss = r.total.item();
  r.visible_voxels = visible_count(labels);
  return r;
}

}  // namespace plume
