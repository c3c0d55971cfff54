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

#include "plume/config.hpp"

#include <cmath>
#include <set>

#include "json.hpp"
#include "plume/binary_io.hpp"
#include "plume/error.hpp"

namespace plume {

using nlohmann::json;

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kSmall: return "small";
    case Variant::kMiddle: return "middle";
    case Variant::kLarge: return "large";
  }
  return "?";
}

std::string to_string(FeatureResolution r) {
  switch (r) {
    case FeatureResolution::kFull: return "full";
    case FeatureResolution::kHalf: return "half";
    case FeatureResolution::kQuarter: return "quarter";
  }
  return "?";
}

std::string to_string(VolumeNet v) {
  switch (v) {
    case VolumeNet::kHybrid3dBev: return "hybrid_3d_bev";
    case VolumeNet::kBevOnly: return "bev_only";
    case VolumeNet::kPure3d: return "pure_3d";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "small") return Variant::kSmall;
  if (s == "middle") return Variant::kMiddle;
  if (s == "large") return Variant::kLarge;
  fail(ErrorCode::kInvalidConfig, "unknown variant '" + s + "'");
}

ChannelPlan channel_plan(Variant v) {
  ChannelPlan p;
  switch (v) {
    case Variant::kSmall:
      p.maxpool0 = 8;
      p.layer1 = 8;
      p.layer2 = 16;
      p.layer3 = 32;
      p.layer4 = 32;
      p.layer_blocks = {3, 6, 2, 2};
      p.branch = 8;
      p.conv1 = 32;
      p.conv2 = 8;
      p.fpn = 32;
      p.conv3d = 12;
      p.bev = 96;
      p.bev_down = 192;
      p.occ_hidden = 48;
      p.det_layers = {2, 3, 6, 6, 3};
      p.det_channels = {32, 96, 128, 192, 192};
      break;
    case Variant::kMiddle:
      p.maxpool0 = 32;
      p.layer1 = 32;
      p.layer2 = 64;
      p.layer3 = 128;
      p.layer4 = 128;
      p.layer_blocks = {3, 6, 2, 2};
      p.branch = 32;
      p.conv1 = 128;
      p.conv2 = 32;
      p.fpn = 64;
      p.conv3d = 32;
      p.bev = 160;
      p.bev_down = 320;
      p.occ_hidden = 80;
      p.det_layers = {2, 3, 6, 6, 3};
      p.det_channels = {32, 96, 192, 256, 384};
      break;
    case Variant::kLarge:
      p.maxpool0 = 32;
      p.layer1 = 32;
      p.layer2 = 64;
      p.layer3 = 128;
      p.layer4 = 128;
      p.layer_blocks = {3, 6, 6, 6};
      p.branch = 32;
      p.conv1 = 128;
      p.conv2 = 32;
      p.fpn = 96;
      p.conv3d = 48;
      p.bev = 256;
      p.bev_down = 512;
      p.occ_hidden = 128;
      p.det_layers = {3, 3, 6, 6, 3};
      p.det_channels = {48, 128, 192, 256, 384};
      break;
  }
  return p;
}

std::size_t NetworkConfig::channels(std::size_t unscaled) const {
  if (scale == 1.0) return unscaled;
  const auto scaled = static_cast<std::size_t>(std::ceil(static_cast<double>(unscaled) * scale - 1e-9));
  return std::max<std::size_t>(4, scaled);
}

void NetworkConfig::validate() const {
  grid.validate();
  require(scale > 0 && std::isfinite(scale), ErrorCode::kInvalidConfig, "scale must be positive");
  require(dropout >= 0 && dropout < 1, ErrorCode::kInvalidConfig, "dropout must be in [0, 1)");
  const GridDims d = grid_dims(grid);
  require(d.x % 16 == 0 && d.z % 16 == 0, ErrorCode::kInvalidConfig,
          "grid width and depth must be multiples of 16 for the detection encoder, got " + std::to_string(d.x) +
              " x " + std::to_string(d.z));
}

namespace {

AxisRange parse_range(const json& j, const char* key) {
  require(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number(), ErrorCode::kInvalidConfig,
          std::string(key) + " must be [min, max]");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
T get_typed(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kInvalidConfig, "wrong type for key '" + key + "'");
  }
}

}  // namespace

NetworkConfig parse_network_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kInvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  require(root.is_object(), ErrorCode::kInvalidConfig, "config must be a JSON object");
  NetworkConfig cfg;
  for (const auto& [key, value] : root.items()) {
    if (key == "variant") {
      cfg.variant = parse_variant(get_typed<std::string>(value, key));
    } else if (key == "image_feature_resolution") {
      const auto s = get_typed<std::string>(value, key);
      if (s == "full") cfg.image_feature_resolution = FeatureResolution::kFull;
      else if (s == "half") cfg.image_feature_resolution = FeatureResolution::kHalf;
      else if (s == "quarter") cfg.image_feature_resolution = FeatureResolution::kQuarter;
      else fail(ErrorCode::kInvalidConfig, "unknown image_feature_resolution '" + s + "'");
    } else if (key == "volume_net") {
      const auto s = get_typed<std::string>(value, key);
      if (s == "hybrid_3d_bev") cfg.volume_net = VolumeNet::kHybrid3dBev;
      else if (s == "bev_only") cfg.volume_net = VolumeNet::kBevOnly;
      else if (s == "pure_3d") cfg.volume_net = VolumeNet::kPure3d;
      else fail(ErrorCode::kInvalidConfig, "unknown volume_net '" + s + "'");
    } else if (key == "concat_voxel_coords") {
      cfg.concat_voxel_coords = get_typed<bool>(value, key);
    } else if (key == "fusion_enabled") {
      cfg.fusion_enabled = get_typed<bool>(value, key);
    } else if (key == "share_stereo_weights") {
      cfg.share_stereo_weights = get_typed<bool>(value, key);
    } else if (key == "require_both_cameras") {
      cfg.require_both_cameras = get_typed<bool>(value, key);
    } else if (key == "scale") {
      cfg.scale = get_typed<double>(value, key);
    } else if (key == "dropout") {
      cfg.dropout = get_typed<double>(value, key);
    } else if (key == "grid") {
      require(value.is_object(), ErrorCode::kInvalidConfig, "grid must be an object");
      for (const auto& [gk, gv] : value.items()) {
        if (gk == "x_range") cfg.grid.x_range = parse_range(gv, "x_range");
        else if (gk == "y_range") cfg.grid.y_range = parse_range(gv, "y_range");
        else if (gk == "z_range") cfg.grid.z_range = parse_range(gv, "z_range");
        else if (gk == "resolution") cfg.grid.resolution = get_typed<double>(gv, gk);
        else fail(ErrorCode::kInvalidConfig, "unknown grid key '" + gk + "'");
      }
    } else {
      fail(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'");
    }
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kInvalidConfig, e.what());
  }
  return cfg;
}

NetworkConfig load_network_config(const std::string& path) { return parse_network_config(read_file_text(path)); }

std::string network_config_to_json(const NetworkConfig& c) {
  json j;
  j["variant"] = to_string(c.variant);
  j["image_feature_resolution"] = to_string(c.image_feature_resolution);
  j["volume_net"] = to_string(c.volume_net);
  j["concat_voxel_coords"] = c.concat_voxel_coords;
  j["fusion_enabled"] = c.fusion_enabled;
  j["share_stereo_weights"] = c.share_stereo_weights;
  j["require_both_cameras"] = c.require_both_cameras;
  j["scale"] = c.scale;
  j["dropout"] = c.dropout;
  j["grid"] = {{"x_range", {c.grid.x_range.min, c.grid.x_range.max}},
               {"y_range", {c.grid.y_range.min, c.grid.y_range.max}},
               {"z_range", {c.grid.z_range.min, c.grid.z_range.max}},
               {"resolution", c.grid.resolution}};
  return j.dump(2);
}

}  // namespace plume
