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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plume/geometry.hpp"

namespace plume {

struct AxisRange {
  double min = 0.0;
  double max = 1.0;
};

// Metric voxel grid in the camera frame. Cells are half-open: voxel i on an
// axis covers [min + i*res, min + (i+1)*res).
struct VoxelGridSpec {
  AxisRange x_range{-32.0, 32.0};
  AxisRange y_range{-1.0, 2.0};
  AxisRange z_range{2.0, 62.8};
  double resolution = 0.2;

  void validate() const;

  // The 64 m x 60.8 m x 3 m range at 0.2 m used for KITTI-scale models.
  static VoxelGridSpec kitti();
};

struct GridDims {
  std::size_t x = 0;  // width (lateral)
  std::size_t y = 0;  // height (camera y)
  std::size_t z = 0;  // depth

  std::size_t count() const { return x * y * z; }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (i * y + j) * z + k; }
  bool operator==(const GridDims&) const = default;
};

struct VoxelIndex {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;
  bool operator==(const VoxelIndex&) const = default;
};

GridDims grid_dims(const VoxelGridSpec& spec);
Point3 voxel_center(const VoxelGridSpec& spec, std::size_t i, std::size_t j, std::size_t k);
std::optional<VoxelIndex> point_to_voxel(const VoxelGridSpec& spec, const Point3& p);

// Per-voxel values (probabilities or {0,1} labels) in x-major, then y, then z
// order, plus a same-shape camera field-of-view mask.
struct OccupancyGrid {
  VoxelGridSpec spec;
  GridDims dims;
  std::vector<double> values;
  std::vector<std::uint8_t> fov_mask;

  double at(std::size_t i, std::size_t j, std::size_t k) const { return values[dims.index(i, j, k)]; }
  bool visible(std::size_t i, std::size_t j, std::size_t k) const { return fov_mask[dims.index(i, j, k)] != 0; }
};

std::vector<std::uint8_t> fov_mask(const VoxelGridSpec& spec, const CameraRig& rig,
                                   bool require_both_cameras = true);

// Binary occupancy: 1 iff at least one in-range point falls inside the cell.
// When `rig` is absent the FOV mask is all ones.
OccupancyGrid occupancy_from_points(const VoxelGridSpec& spec, std::span<const Point3> cloud,
                                    const std::optional<CameraRig>& rig = std::nullopt,
                                    bool require_both_cameras = true);

// Voxel IoU of `pred >= threshold` against binary labels over visible voxels.
double occupancy_iou(const OccupancyGrid& pred, const OccupancyGrid& labels, double threshold = 0.5);

// "OCCG" file: 16-byte header (magic, u32 X, Y, Z little-endian), X*Y*Z value
// bytes (round(v * 255)), then X*Y*Z mask bytes.
std::vector<std::uint8_t> encode_occupancy(const OccupancyGrid& grid);
OccupancyGrid decode_occupancy(std::span<const std::uint8_t> bytes, const VoxelGridSpec& spec);
void write_occupancy_file(const std::string& path, const OccupancyGrid& grid);
OccupancyGrid read_occupancy_file(const std::string& path, const VoxelGridSpec& spec);

}  // namespace plume
