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

#include <array>
#include <span>
#include <string>
#include <vector>

#include "plume/tensor.hpp"
#include "plume/voxel_grid.hpp"

namespace plume {

// Oriented rectangle on the ground plane (u = camera x, v = camera z). At
// theta = 0 the w side runs along u and the h side along v; corners rotate
// counter-clockwise in the (u, v) plane as theta grows.
struct BevBox {
  double u = 0.0;
  double v = 0.0;
  double w = 1.0;
  double h = 1.0;
  double theta = 0.0;  // [-pi, pi)
  double score = 0.0;
  int class_id = 0;

  using Corner = std::array<double, 2>;
  // Counter-clockwise, starting at local (-w/2, -h/2).
  std::array<Corner, 4> corners() const;
  double area() const { return w * h; }
  // Closed containment test in the box's own frame.
  bool contains(double pu, double pv) const;
};

// Wraps to [-pi, pi).
double normalize_angle(double a);

// Metric center of detection-map cell (i along X, j along Z) for maps at
// `stride` voxels per cell.
std::array<double, 2> cell_center(const VoxelGridSpec& grid, std::size_t stride, std::size_t i, std::size_t j);
// Detection-map extents for a grid: ceil(X / stride), ceil(Z / stride).
std::array<std::size_t, 2> detection_map_dims(const VoxelGridSpec& grid, std::size_t stride);

// class_logits [1, A, B], regression [6, A, B]. Cells with sigmoid(logit) >
// score_threshold become boxes, in row-major cell order.
std::vector<BevBox> decode_boxes(const Tensor& class_logits, const Tensor& regression, const VoxelGridSpec& grid,
                                 std::size_t stride, double score_threshold);

// Intersection over union of two oriented boxes by convex polygon clipping.
double rotated_iou(const BevBox& a, const BevBox& b);
double polygon_area(std::span<const BevBox::Corner> polygon);
// Convex intersection of two counter-clockwise polygons.
std::vector<BevBox::Corner> clip_convex(std::span<const BevBox::Corner> subject, std::span<const BevBox::Corner> clip);

// Greedy suppression in (score desc, u asc, v asc) order; a box is dropped
// when its IoU with a kept box exceeds `iou_threshold`.
std::vector<BevBox> nms(std::vector<BevBox> boxes, double iou_threshold);
bool nms_order(const BevBox& a, const BevBox& b);

// One "class u v w h theta score" line per box, 9 significant digits.
std::string format_detections(std::span<const BevBox> boxes);
std::vector<BevBox> parse_detections(const std::string& text);
void write_detections_file(const std::string& path, std::span<const BevBox> boxes);
std::vector<BevBox> read_detections_file(const std::string& path);

}  // namespace plume
