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

#include <cstdint>
#include <vector>

#include "plume/dataset.hpp"
#include "plume/voxel_grid.hpp"

namespace plume {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

struct SyntheticSceneSpec {
  std::uint64_t seed = 0;
  std::size_t min_boxes = 2;
  std::size_t max_boxes = 3;
  VoxelGridSpec grid;
  CameraRig rig;
  double ground_y = 1.5;       // camera-frame height of the flat ground
  Interval box_width{1.5, 1.8};
  Interval box_length{3.4, 4.2};
  Interval box_height{1.3, 1.5};
  Interval heading{-3.14159265358979, 3.14159265358979};
  double ground_spacing = 0.1;   // meters between ground samples (density 1 / spacing^2)
  double surface_spacing = 0.05; // meters between box-surface samples
  double max_ground_depth = 30.0;

  void validate() const;
  // 128x48 images, 64x8x64 grid at 0.2 m: the desk-scale training setup.
  static SyntheticSceneSpec toy(std::uint64_t seed);
};

// One rendered surface point: its left/right projections share v and differ
// in u by the disparity of the source point.
struct SplatRecord {
  Point3 source;
  double u_left = 0.0;
  double u_right = 0.0;
  double v = 0.0;
};

struct SyntheticScene {
  StereoSample sample;
  OccupancyGrid occupancy;
  std::vector<SplatRecord> splats;
};

// Boxes on a flat ground plane, surface points on the ground and box faces,
// stereo images by z-buffered square splats, occupancy from the same points.
// Identical specs produce bit-identical scenes.
SyntheticScene synth_scene(const SyntheticSceneSpec& spec);

}  // namespace plume
