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
#include <string>

#include "plume/voxel_grid.hpp"

namespace plume {

enum class Variant { kSmall, kMiddle, kLarge };
enum class FeatureResolution { kFull = 1, kHalf = 2, kQuarter = 4 };
enum class VolumeNet { kHybrid3dBev, kBevOnly, kPure3d };

std::string to_string(Variant v);
std::string to_string(FeatureResolution r);
std::string to_string(VolumeNet v);
Variant parse_variant(const std::string& s);

// Unscaled channel counts and layer counts of one model size.
struct ChannelPlan {
  std::size_t conv0 = 32;
  std::size_t maxpool0 = 0;
  std::size_t layer1 = 0;
  std::size_t layer2 = 0;
  std::size_t layer3 = 0;
  std::size_t layer4 = 0;
  std::array<std::size_t, 4> layer_blocks{};  // residual blocks in layer1..layer4
  std::size_t branch = 0;
  std::size_t conv1 = 0;
  std::size_t conv2 = 0;
  std::size_t fpn = 0;
  std::size_t fpn_out = 32;
  std::size_t conv3d = 0;
  std::size_t bev = 0;
  std::size_t bev_down = 0;
  std::size_t occ_hidden = 0;
  std::array<std::size_t, 5> det_layers{};
  std::array<std::size_t, 5> det_channels{};
};

ChannelPlan channel_plan(Variant v);

struct NetworkConfig {
  Variant variant = Variant::kSmall;
  FeatureResolution image_feature_resolution = FeatureResolution::kFull;
  VolumeNet volume_net = VolumeNet::kHybrid3dBev;
  bool concat_voxel_coords = false;
  bool fusion_enabled = false;
  bool share_stereo_weights = true;
  bool require_both_cameras = true;
  VoxelGridSpec grid = VoxelGridSpec::kitti();
  double scale = 1.0;
  double dropout = 0.2;

  // Channel count after applying `scale` (rounded up, at least 4).
  std::size_t channels(std::size_t unscaled) const;
  ChannelPlan plan() const { return channel_plan(variant); }
  int feature_stride() const { return static_cast<int>(image_feature_resolution); }
  // Per-image feature channels and the resulting volume channels.
  std::size_t image_channels() const { return channels(plan().fpn_out); }
  std::size_t volume_channels() const { return 2 * image_channels() + (concat_voxel_coords ? 3 : 0); }

  void validate() const;
};

// JSON object; every key optional:
//   variant: "small" | "middle" | "large"
//   image_feature_resolution: "full" | "half" | "quarter"
//   volume_net: "hybrid_3d_bev" | "bev_only" | "pure_3d"
//   concat_voxel_coords, fusion_enabled, share_stereo_weights, require_both_cameras: bool
//   scale, dropout: number
//   grid: { x_range: [min, max], y_range: [...], z_range: [...], resolution: number }
// Unknown keys are rejected with kInvalidConfig.
NetworkConfig parse_network_config(const std::string& json_text);
NetworkConfig load_network_config(const std::string& path);
std::string network_config_to_json(const NetworkConfig& config);

}  // namespace plume
