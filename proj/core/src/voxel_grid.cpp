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

#include "plume/voxel_grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "plume/binary_io.hpp"
#include "plume/error.hpp"

namespace plume {

namespace {

std::size_t axis_cells(const AxisRange& r, double res) {
  return static_cast<std::size_t>(std::ceil((r.max - r.min) / res - 1e-9));
}

std::optional<std::size_t> axis_index(const AxisRange& r, double res, std::size_t n, double v) {
  if (!(v >= r.min) || !(v < r.max)) return std::nullopt;
  auto idx = static_cast<std::size_t>(std::floor((v - r.min) / res));
  // Cell i spans [min + i*res, min + (i+1)*res); the division can land one
  // cell off when v sits on a boundary.
  if (idx > 0 && v < r.min + static_cast<double>(idx) * res) --idx;
  else if (v >= r.min + static_cast<double>(idx + 1) * res) ++idx;
  if (idx >= n) return std::nullopt;
  return idx;
}

}  // namespace

void VoxelGridSpec::validate() const {
  require(resolution > 0, ErrorCode::kInvalidSpec, "resolution must be positive");
  for (const auto* r : {&x_range, &y_range, &z_range}) {
    require(r->max > r->min, ErrorCode::kInvalidSpec, "axis range must satisfy max > min");
  }
}

VoxelGridSpec VoxelGridSpec::kitti() { return VoxelGridSpec{}; }

GridDims grid_dims(const VoxelGridSpec& spec) {
  spec.validate();
  return {axis_cells(spec.x_range, spec.resolution), axis_cells(spec.y_range, spec.resolution),
          axis_cells(spec.z_range, spec.resolution)};
}

Point3 voxel_center(const VoxelGridSpec& spec, std::size_t i, std::size_t j, std::size_t k) {
  const GridDims d = grid_dims(spec);
  if (i >= d.x || j >= d.y || k >= d.z) {
    fail(ErrorCode::kIndexOutOfBounds, "voxel (" + std::to_string(i) + ", " + std::to_string(j) +
                                           ", " + std::to_string(k) + ")");
  }
  const double r = spec.resolution;
  return {spec.x_range.min + (static_cast<double>(i) + 0.5) * r,
          spec.y_range.min + (static_cast<double>(j) + 0.5) * r,
          spec.z_range.min + (static_cast<double>(k) + 0.5) * r};
}

std::optional<VoxelIndex> point_to_voxel(const VoxelGridSpec& spec, const Point3& p) {
  const GridDims d = grid_dims(spec);
  const auto i = axis_index(spec.x_range, spec.resolution, d.x, p.x);
  const auto j = axis_index(spec.y_range, spec.resolution, d.y, p.y);
  const auto k = axis_index(spec.z_range, spec.resolution, d.z, p.z);
  if (!i || !j || !k) return std::nullopt;
  return VoxelIndex{*i, *j, *k};
}

std::vector<std::uint8_t> fov_mask(const VoxelGridSpec& spec, const CameraRig& rig,
                                   bool require_both_cameras) {
  rig.validate();
  const GridDims d = grid_dims(spec);
  std::vector<std::uint8_t> mask(d.count(), 0);
  for (std::size_t i = 0; i < d.x; ++i) {
    for (std::size_t j = 0; j < d.y; ++j) {
      for (std::size_t k = 0; k < d.z; ++k) {
        mask[d.index(i, j, k)] = in_fov(rig, voxel_center(spec, i, j, k), require_both_cameras) ? 1 : 0;
      }
    }
  }
  return mask;
}

OccupancyGrid occupancy_from_points(const VoxelGridSpec& spec, std::span<const Point3> cloud,
                                    const std::optional<CameraRig>& rig, bool require_both_cameras) {
  OccupancyGrid grid;
  grid.spec = spec;
  grid.dims = grid_dims(spec);
  grid.values.assign(grid.dims.count(), 0.0);
  for (const Point3& p : cloud) {
    if (auto v = point_to_voxel(spec, p)) grid.values[grid.dims.index(v->i, v->j, v->k)] = 1.0;
  }
  grid.fov_mask = rig ? fov_mask(spec, *rig, require_both_cameras)
                      : std::vector<std::uint8_t>(grid.dims.count(), 1);
  return grid;
}

double occupancy_iou(const OccupancyGrid& pred, const OccupancyGrid& labels, double threshold) {
  require(pred.dims == labels.dims, ErrorCode::kShapeMismatch, "occupancy grids differ in shape");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t n = 0; n < pred.values.size(); ++n) {
    if (!labels.fov_mask[n]) continue;
    const bool a = pred.values[n] >= threshold;
    const bool b = labels.values[n] >= 0.5;
    inter += (a && b) ? 1 : 0;
    uni += (a || b) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::uint8_t> encode_occupancy(const OccupancyGrid& grid) {
  const std::size_t n = grid.dims.count();
  require(grid.values.size() == n && grid.fov_mask.size() == n, ErrorCode::kShapeMismatch,
          "occupancy buffers do not match dims");
  ByteWriter w;
  w.bytes("OCCG", 4);
  w.u32(static_cast<std::uint32_t>(grid.dims.x));
  w.u32(static_cast<std::uint32_t>(grid.dims.y));
  w.u32(static_cast<std::uint32_t>(grid.dims.z));
  for (double v : grid.values) {
    w.u8(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  for (std::uint8_t m : grid.fov_mask) w.u8(m ? 1 : 0);
  return w.take();
}

OccupancyGrid decode_occupancy(std::span<const std::uint8_t> bytes, const VoxelGridSpec& spec) {
  ByteReader r(bytes);
  char magic[4];
  r.bytes(magic, 4);
  require(std::memcmp(magic, "OCCG", 4) == 0, ErrorCode::kIoError, "bad occupancy magic");
  OccupancyGrid grid;
  grid.spec = spec;
  grid.dims.x = r.u32();
  grid.dims.y = r.u32();
  grid.dims.z = r.u32();
  require(grid.dims == grid_dims(spec), ErrorCode::kShapeMismatch, "occupancy file does not match grid spec");
  const std::size_t n = grid.dims.count();
  grid.values.resize(n);
  grid.fov_mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) grid.values[i] = r.u8() / 255.0;
  for (std::size_t i = 0; i < n; ++i) grid.fov_mask[i] = r.u8() ? 1 : 0;
  return grid;
}

void write_occupancy_file(const std::string& path, const OccupancyGrid& grid) {
  write_file_bytes(path, encode_occupancy(grid));
}

OccupancyGrid read_occupancy_file(const std::string& path, const VoxelGridSpec& spec) {
  const auto bytes = read_file_bytes(path);
  return decode_occupancy(bytes, spec);
}

}  // namespace plume
