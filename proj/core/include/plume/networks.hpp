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
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "plume/checkpoint.hpp"
#include "plume/config.hpp"
#include "plume/geometry.hpp"
#include "plume/layers.hpp"
#include "plume/tensor.hpp"
#include "plume/voxel_grid.hpp"

namespace plume {

using ShapeTrace = std::vector<std::pair<std::string, Shape>>;

struct ForwardContext {
  bool train = false;
  std::mt19937_64* rng = nullptr;  // required when train and dropout > 0
  ShapeTrace* trace = nullptr;     // receives (layer name, output shape) when set
};

// Per-voxel features [C, X, Y, Z] on a metric grid.
struct FeatureVolume {
  Tensor values;
  VoxelGridSpec spec;
};

// Dense detection maps at stride 4 of the BEV grid.
struct DenseDetections {
  Tensor class_logits;  // [1, X/4, Z/4]
  Tensor regression;    // [6, X/4, Z/4]: du, dv, log w, log h, sin, cos
};

// Gathers left/right features at every voxel center. Voxels outside the
// field of view get all-zero features. `feature_rig` must describe the
// feature maps' resolution.
FeatureVolume build_plume(const Tensor& left_features, const Tensor& right_features, const VoxelGridSpec& grid,
                          const CameraRig& feature_rig, bool concat_voxel_coords, bool require_both_cameras = true);

// Occupancy-weighted image features summed over height and appended to the
// BEV features. occupancy: [X, Y, Z] probabilities.
Tensor image_feature_fusion(const Tensor& left_features, const Tensor& right_features, const Tensor& occupancy,
                            const Tensor& bev_features, const VoxelGridSpec& grid, const CameraRig& feature_rig,
                            bool require_both_cameras = true);

class StereoImageNet {
 public:
  StereoImageNet(const NetworkConfig& config, LayerFactory& factory, const std::string& prefix);
  // image [3, H, W] with H, W divisible by 4 -> [C_img, H / s, W / s].
  Tensor forward(const Tensor& image, ForwardContext& ctx) const;

 private:
  struct UpBranch {
    std::vector<ConvLayer> convs;
    std::size_t upsample_stages = 0;  // convs[i] is followed by a 2x upsample for i < stages
  };

  NetworkConfig config_;
  std::vector<ConvLayer> conv0_;
  bool maxpool_projects_ = false;
  ConvLayer maxpool_proj_;
  std::array<std::vector<BasicBlock>, 4> layers_;
  std::array<ConvLayer, 4> branches_;
  ConvLayer conv1_;
  ConvLayer conv2_;
  ConvLayer fpn_lateral2_;
  ConvLayer fpn_lateral1_;
  ConvLayer fpn_lateral0_;
  std::array<UpBranch, 3> up_;
  ConvLayer fpn_conv_;
};

class VolumeNetwork {
 public:
  VolumeNetwork(const NetworkConfig& config, LayerFactory& factory, const std::string& prefix);
  // [C, X, Y, Z] -> [C_bev, X, Z]
  Tensor forward(const FeatureVolume& volume, ForwardContext& ctx) const;
  std::size_t output_channels() const { return out_channels_; }

 private:
  Tensor hourglass(const Tensor& x, ForwardContext& ctx) const;

  NetworkConfig config_;
  std::size_t y_cells_ = 0;
  std::vector<ConvLayer> conv3d_;
  std::array<std::array<ConvLayer, 2>, 4> down_;
  std::array<ConvLayer, 2> up4_;
  std::array<ConvLayer, 2> up5_;
  std::size_t out_channels_ = 0;
};

class OccupancyHead {
 public:
  OccupancyHead(const NetworkConfig& config, LayerFactory& factory, const std::string& prefix,
                std::size_t in_channels);
  // [C_bev, X, Z] -> logits [X, Y, Z]
  Tensor logits(const Tensor& bev, ForwardContext& ctx) const;

 private:
  GridDims dims_;
  ConvLayer conv3_;
  ConvLayer conv4_;
};

class DetectionHead {
 public:
  DetectionHead(const NetworkConfig& config, LayerFactory& factory, const std::string& prefix,
                std::size_t in_channels);
  DenseDetections forward(const Tensor& bev, ForwardContext& ctx) const;

 private:
  std::vector<ConvLayer> block1_;
  std::array<std::vector<BottleneckBlock>, 4> blocks_;
  ConvLayer lateral5_;
  ConvLayer lateral4_;
  ConvLayer lateral3_;
  ConvLayer fuse_;
  ConvLayer cls_hidden_;
  ConvLayer cls_out_;
  ConvLayer reg_hidden_;
  ConvLayer reg_out_;
};

struct BackboneOutputs {
  Tensor left_features;
  Tensor right_features;
  CameraRig feature_rig;
  FeatureVolume volume;
  Tensor bev;
  Tensor occupancy_logits;  // [X, Y, Z]
  Tensor occupancy;         // sigmoid(occupancy_logits)
};

// Parameter name prefixes; stage-wise training selects on them.
inline constexpr const char* kStereoPrefix = "stereo.";
inline constexpr const char* kStereoRightPrefix = "stereo_right.";
inline constexpr const char* kVolumePrefix = "volume.";
inline constexpr const char* kOccupancyPrefix = "occ_head.";
inline constexpr const char* kDetectionPrefix = "det_head.";

// Stereo image network, PLUME construction, 3D-BEV network and both headers.
class PlumeModel {
 public:
  PlumeModel(NetworkConfig config, std::uint64_t seed);

  const NetworkConfig& config() const { return config_; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }

  Tensor stereo_forward(const Tensor& image, bool right_camera, ForwardContext& ctx) const;
  FeatureVolume build_volume(const Tensor& left_features, const Tensor& right_features, const CameraRig& feature_rig,
                             ForwardContext& ctx) const;
  Tensor volume_forward(const FeatureVolume& volume, ForwardContext& ctx) const;
  Tensor occupancy_logits(const Tensor& bev, ForwardContext& ctx) const;
  DenseDetections detection_head(const Tensor& detection_input, ForwardContext& ctx) const;

  // Everything up to the occupancy probabilities. `rig` describes the input images.
  BackboneOutputs backbone(const Tensor& left_image, const Tensor& right_image, const CameraRig& rig,
                           ForwardContext& ctx) const;
  // BEV features, fused with occupancy-weighted image features when enabled.
  Tensor detection_input(const BackboneOutputs& b) const;

 private:
  NetworkConfig config_;
  ParameterStore params_;
  std::unique_ptr<StereoImageNet> stereo_left_;
  std::unique_ptr<StereoImageNet> stereo_right_;
  std::unique_ptr<VolumeNetwork> volume_;
  std::unique_ptr<OccupancyHead> occupancy_;
  std::unique_ptr<DetectionHead> detection_;
};

// ---- shape planning --------------------------------------------------------

struct ShapePlanRow {
  std::string name;
  Shape shape;
  std::string symbolic;  // e.g. "32xHxW", "8x(1/2)Hx(1/2)W", "(12xY)xXxZ"
};

// Layer-by-layer output shapes computed analytically (no allocation).
std::vector<ShapePlanRow> shape_plan(const NetworkConfig& config, std::size_t image_h, std::size_t image_w);

struct ShapeDiff {
  std::string row;
  std::string expected;
  std::string actual;
};

// Reference "Output Dimension" rows for the stereo network, PLUME, 3D-BEV
// network and occupancy header of the three model sizes.
std::vector<ShapePlanRow> reference_architecture(Variant variant, const VoxelGridSpec& grid, std::size_t image_h,
                                                 std::size_t image_w);
bool has_reference(const NetworkConfig& config);
std::vector<ShapeDiff> diff_against_reference(const NetworkConfig& config, std::size_t image_h, std::size_t image_w);

}  // namespace plume
