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

#include <algorithm>
#include <map>

#include "plume/error.hpp"
#include "plume/networks.hpp"
#include "plume/ops.hpp"

namespace plume {

namespace {

std::size_t conv3x3(std::size_t extent, std::size_t stride) { return ops::conv_out_extent(extent, 3, stride, 1, 1); }

// "H", "(1/2)H", or a plain number when `value` is not an integer fraction of `base`.
std::string sym_dim(std::size_t value, std::size_t base, const char* name) {
  if (value == base) return name;
  if (value > 0 && base % value == 0) return "(1/" + std::to_string(base / value) + ")" + name;
  return std::to_string(value);
}

struct PlanBuilder {
  std::vector<ShapePlanRow> rows;
  std::size_t H, W, X, Y, Z;

  void image(const std::string& name, std::size_t c, std::size_t h, std::size_t w) {
    rows.push_back({name, {c, h, w}, std::to_string(c) + "x" + sym_dim(h, H, "H") + "x" + sym_dim(w, W, "W")});
  }
  void bev(const std::string& name, std::size_t c, std::size_t x, std::size_t z, std::string channel_token = "") {
    if (channel_token.empty()) channel_token = std::to_string(c);
    rows.push_back({name, {c, x, z}, channel_token + "x" + sym_dim(x, X, "X") + "x" + sym_dim(z, Z, "Z")});
  }
  void volume(const std::string& name, std::size_t c, std::size_t x, std::size_t y, std::size_t z) {
    rows.push_back({name, {c, x, y, z},
                    std::to_string(c) + "x" + sym_dim(x, X, "X") + "x" + sym_dim(y, Y, "Y") + "x" + sym_dim(z, Z, "Z")});
  }
};

// Splits "a x b x (c x d)" style strings at top-level 'x'.
std::vector<std::string> split_symbolic(const std::string& s) {
  std::vector<std::string> out(1);
  int depth = 0;
  for (char ch : s) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (ch == 'x' && depth == 0) {
      out.emplace_back();
    } else {
      out.back() += ch;
    }
  }
  return out;
}

std::size_t eval_token(const std::string& token, const std::map<char, std::size_t>& vars) {
  if (token.size() > 2 && token.front() == '(' && token.find('x') != std::string::npos) {
    // "(12xY)"
    std::size_t product = 1;
    for (const std::string& f : split_symbolic(token.substr(1, token.size() - 2))) product *= eval_token(f, vars);
    return product;
  }
  if (token.rfind("(1/", 0) == 0) {
    const std::size_t close = token.find(')');
    const std::size_t den = std::stoul(token.substr(3, close - 3));
    return eval_token(token.substr(close + 1), vars) / den;
  }
  if (token.size() == 1 && vars.count(token[0])) return vars.at(token[0]);
  return std::stoul(token);
}

using RefTable = std::vector<std::pair<const char*, const char*>>;

// "Output Dimension" column per model size.
const RefTable& reference_rows(Variant v) {
  static const RefTable small{
      {"image", "3xHxW"},
      {"conv0", "32xHxW"},
      {"maxpool0", "8x(1/2)Hx(1/2)W"},
      {"layer1", "8x(1/2)Hx(1/2)W"},
      {"layer2", "16x(1/4)Hx(1/4)W"},
      {"layer3", "32x(1/4)Hx(1/4)W"},
      {"layer4", "32x(1/4)Hx(1/4)W"},
      {"branch1", "8x(1/4)Hx(1/4)W"},
      {"branch2", "8x(1/4)Hx(1/4)W"},
      {"branch3", "8x(1/4)Hx(1/4)W"},
      {"branch4", "8x(1/4)Hx(1/4)W"},
      {"concat", "80x(1/4)Hx(1/4)W"},
      {"conv1", "32x(1/4)Hx(1/4)W"},
      {"conv2", "8x(1/4)Hx(1/4)W"},
      {"fpn_conv2", "32x(1/4)Hx(1/4)W"},
      {"fpn_conv2_up", "32xHxW"},
      {"fpn_conv1", "32x(1/2)Hx(1/2)W"},
      {"fpn_conv1_up", "32xHxW"},
      {"fpn_conv0", "32xHxW"},
      {"fpn_conv0_up", "32xHxW"},
      {"fpn_sum", "32xHxW"},
      {"dropout", "32xHxW"},
      {"fpn_conv", "32xHxW"},
      {"plume", "64xXxYxZ"},
      {"3dconv0", "12xXxYxZ"},
      {"reshape", "(12xY)xXxZ"},
      {"bev_conv0", "96xXxZ"},
      {"bev_conv1", "96xXxZ"},
      {"bev_conv2", "192x(1/2)Xx(1/2)Z"},
      {"bev_conv3", "192x(1/4)Xx(1/4)Z"},
      {"bev_deconv4", "192x(1/2)Xx(1/2)Z"},
      {"bev_deconv5", "96xXxZ"},
      {"conv3", "48xXxZ"},
      {"conv4", "YxXxZ"},
  };
  static const RefTable middle{
      {"image", "3xHxW"},
      {"conv0", "32xHxW"},
      {"maxpool0", "32x(1/2)Hx(1/2)W"},
      {"layer1", "32x(1/2)Hx(1/2)W"},
      {"layer2", "64x(1/4)Hx(1/4)W"},
      {"layer3", "128x(1/4)Hx(1/4)W"},
      {"layer4", "128x(1/4)Hx(1/4)W"},
      {"branch1", "32x(1/4)Hx(1/4)W"},
      {"branch2", "32x(1/4)Hx(1/4)W"},
      {"branch3", "32x(1/4)Hx(1/4)W"},
      {"branch4", "32x(1/4)Hx(1/4)W"},
      {"concat", "320x(1/4)Hx(1/4)W"},
      {"conv1", "128x(1/4)Hx(1/4)W"},
      {"conv2", "32x(1/4)Hx(1/4)W"},
      {"fpn_conv2", "64x(1/4)Hx(1/4)W"},
      {"fpn_conv2_up", "64xHxW"},
      {"fpn_conv1", "64x(1/2)Hx(1/2)W"},
      {"fpn_conv1_up", "64xHxW"},
      {"fpn_conv0", "64xHxW"},
      {"fpn_conv0_up", "64xHxW"},
      {"fpn_sum", "64xHxW"},
      {"dropout", "64xHxW"},
      {"fpn_conv", "32xHxW"},
      {"plume", "64xXxYxZ"},
      {"3dconv0", "32xXxYxZ"},
      {"reshape", "(32xY)xXxZ"},
      {"bev_conv0", "160xXxZ"},
      {"bev_conv1", "160xXxZ"},
      {"bev_conv2", "320x(1/2)Xx(1/2)Z"},
      {"bev_conv3", "320x(1/4)Xx(1/4)Z"},
      {"bev_deconv4", "320x(1/2)Xx(1/2)Z"},
      {"bev_deconv5", "160xXxZ"},
      {"conv3", "80xXxZ"},
      {"conv4", "YxXxZ"},
  };
  static const RefTable large{
      {"image", "3xHxW"},
      {"conv0", "32xHxW"},
      {"maxpool0", "32x(1/2)Hx(1/2)W"},
      {"layer1", "32x(1/2)Hx(1/2)W"},
      {"layer2", "64x(1/4)Hx(1/4)W"},
      {"layer3", "128x(1/4)Hx(1/4)W"},
      {"layer4", "128x(1/4)Hx(1/4)W"},
      {"branch1", "32x(1/4)Hx(1/4)W"},
      {"branch2", "32x(1/4)Hx(1/4)W"},
      {"branch3", "32x(1/4)Hx(1/4)W"},
      {"branch4", "32x(1/4)Hx(1/4)W"},
      {"concat", "320x(1/4)Hx(1/4)W"},
      {"conv1", "128x(1/4)Hx(1/4)W"},
      {"conv2", "32x(1/4)Hx(1/4)W"},
      {"fpn_conv2", "96x(1/4)Hx(1/4)W"},
      {"fpn_conv2_up", "96xHxW"},
      {"fpn_conv1", "96x(1/2)Hx(1/2)W"},
      {"fpn_conv1_up", "96xHxW"},
      {"fpn_conv0", "96xHxW"},
      {"fpn_conv0_up", "96xHxW"},
      {"fpn_sum", "96xHxW"},
      {"dropout", "96xHxW"},
      {"fpn_conv", "32xHxW"},
      {"plume", "64xXxYxZ"},
      {"3dconv0", "48xXxYxZ"},
      {"reshape", "(48xY)xXxZ"},
      {"bev_conv0", "256xXxZ"},
      {"bev_conv1", "256xXxZ"},
      {"bev_conv2", "512x(1/2)Xx(1/2)Z"},
      {"bev_conv3", "512x(1/4)Xx(1/4)Z"},
      {"bev_deconv4", "512x(1/2)Xx(1/2)Z"},
      {"bev_deconv5", "256xXxZ"},
      {"conv3", "128xXxZ"},
      {"conv4", "YxXxZ"},
  };
  switch (v) {
    case Variant::kSmall: return small;
    case Variant::kMiddle: return middle;
    case Variant::kLarge: return large;
  }
  return small;
}

std::string describe(const ShapePlanRow& r) { return r.symbolic + " " + shape_to_string(r.shape); }

}  // namespace

std::vector<ShapePlanRow> shape_plan(const NetworkConfig& config, std::size_t image_h, std::size_t image_w) {
  config.validate();
  require(image_h >= 4 && image_w >= 4 && image_h % 4 == 0 && image_w % 4 == 0, ErrorCode::kInvalidConfig,
          "image height and width must be positive multiples of 4");
  const GridDims g = grid_dims(config.grid);
  PlanBuilder b{{}, image_h, image_w, g.x, g.y, g.z};
  const ChannelPlan p = config.plan();
  auto ch = [&](std::size_t c) { return config.channels(c); };

  // Stereo image network.
  const std::size_t h2 = ops::conv_out_extent(image_h, 3, 2, 1, 1);
  const std::size_t w2 = ops::conv_out_extent(image_w, 3, 2, 1, 1);
  const std::size_t h4 = conv3x3(h2, 2);
  const std::size_t w4 = conv3x3(w2, 2);
  b.image("image", 3, image_h, image_w);
  b.image("conv0", ch(p.conv0), image_h, image_w);
  b.image("maxpool0", ch(p.maxpool0), h2, w2);
  b.image("layer1", ch(p.layer1), h2, w2);
  b.image("layer2", ch(p.layer2), h4, w4);
  b.image("layer3", ch(p.layer3), h4, w4);
  b.image("layer4", ch(p.layer4), h4, w4);
  for (int i = 1; i <= 4; ++i) b.image("branch" + std::to_string(i), ch(p.branch), h4, w4);
  b.image("concat", ch(p.layer2) + ch(p.layer4) + 4 * ch(p.branch), h4, w4);
  b.image("conv1", ch(p.conv1), h4, w4);
  b.image("conv2", ch(p.conv2), h4, w4);

  const std::size_t fpn = ch(p.fpn);
  const std::size_t stride = static_cast<std::size_t>(config.feature_stride());
  const std::array<std::size_t, 3> src_h{image_h, h2, h4};
  const std::array<std::size_t, 3> src_w{image_w, w2, w4};
  std::size_t out_h = 0;
  std::size_t out_w = 0;
  for (std::size_t level = 3; level-- > 0;) {
    const std::size_t source = std::size_t{1} << level;
    std::size_t h = src_h[level];
    std::size_t w = src_w[level];
    if (source > stride) {
      for (std::size_t f = source; f > stride; f /= 2) {
        h *= 2;
        w *= 2;
      }
    } else if (source < stride) {
      h = conv3x3(h, stride / source);
      w = conv3x3(w, stride / source);
    }
    const std::string name = "fpn_conv" + std::to_string(level);
    b.image(name, fpn, src_h[level], src_w[level]);
    b.image(name + "_up", fpn, h, w);
    out_h = h;
    out_w = w;
  }
  b.image("fpn_sum", fpn, out_h, out_w);
  b.image("dropout", fpn, out_h, out_w);
  b.image("fpn_conv", ch(p.fpn_out), out_h, out_w);

  // PLUME and the 3D-BEV network.
  const std::size_t cv = config.volume_channels();
  const std::size_t c3 = ch(p.conv3d);
  b.volume("plume", cv, g.x, g.y, g.z);
  const std::size_t x2 = conv3x3(g.x, 2), z2 = conv3x3(g.z, 2);
  const std::size_t x4 = conv3x3(x2, 2), z4 = conv3x3(z2, 2);
  if (config.volume_net == VolumeNet::kPure3d) {
    const std::size_t q2 = ch(2 * p.conv3d);
    b.volume("3dconv0", c3, g.x, g.y, g.z);
    b.volume("bev_conv0", c3, g.x, g.y, g.z);
    b.volume("bev_conv1", c3, g.x, g.y, g.z);
    b.volume("bev_conv2", q2, x2, g.y, z2);
    b.volume("bev_conv3", q2, x4, g.y, z4);
    b.volume("bev_deconv4", q2, x2, g.y, z2);
    b.volume("bev_deconv5", c3, g.x, g.y, g.z);
    b.bev("reshape", c3 * g.y, g.x, g.z, "(" + std::to_string(c3) + "xY)");
  } else {
    std::size_t flat_c = cv;
    if (config.volume_net == VolumeNet::kHybrid3dBev) {
      b.volume("3dconv0", c3, g.x, g.y, g.z);
      flat_c = c3;
    }
    b.bev("reshape", flat_c * g.y, g.x, g.z, "(" + std::to_string(flat_c) + "xY)");
    const std::size_t b0 = ch(p.bev), b2 = ch(p.bev_down);
    b.bev("bev_conv0", b0, g.x, g.z);
    b.bev("bev_conv1", b0, g.x, g.z);
    b.bev("bev_conv2", b2, x2, z2);
    b.bev("bev_conv3", b2, x4, z4);
    b.bev("bev_deconv4", b2, x2, z2);
    b.bev("bev_deconv5", b0, g.x, g.z);
  }
  b.bev("conv3", ch(p.occ_hidden), g.x, g.z);
  b.bev("conv4", g.y, g.x, g.z, "Y");

  // Detection header.
  std::size_t x = g.x, z = g.z;
  std::array<std::size_t, 5> dx{}, dz{};
  for (std::size_t blk = 0; blk < 5; ++blk) {
    if (blk > 0) {
      x = conv3x3(x, 2);
      z = conv3x3(z, 2);
    }
    dx[blk] = x;
    dz[blk] = z;
    b.bev("det_block" + std::to_string(blk + 1), ch(p.det_channels[blk]), x, z);
  }
  b.bev("det_fpn", ch(p.det_channels[1]), dx[2], dz[2]);
  b.bev("det_cls", 1, dx[2], dz[2]);
  b.bev("det_reg", 6, dx[2], dz[2]);
  return b.rows;
}

std::vector<ShapePlanRow> reference_architecture(Variant variant, const VoxelGridSpec& grid, std::size_t image_h,
                                                 std::size_t image_w) {
  const GridDims g = grid_dims(grid);
  const std::map<char, std::size_t> vars{{'H', image_h}, {'W', image_w}, {'X', g.x}, {'Y', g.y}, {'Z', g.z}};
  std::vector<ShapePlanRow> out;
  for (const auto& [name, symbolic] : reference_rows(variant)) {
    Shape shape;
    for (const std::string& t : split_symbolic(symbolic)) shape.push_back(eval_token(t, vars));
    out.push_back({name, shape, symbolic});
  }
  return out;
}

bool has_reference(const NetworkConfig& config) {
  return config.scale == 1.0 && config.image_feature_resolution == FeatureResolution::kFull &&
         config.volume_net == VolumeNet::kHybrid3dBev && !config.concat_voxel_coords;
}

std::vector<ShapeDiff> diff_against_reference(const NetworkConfig& config, std::size_t image_h, std::size_t image_w) {
  const std::vector<ShapePlanRow> plan = shape_plan(config, image_h, image_w);
  std::vector<ShapeDiff> diffs;
  for (const ShapePlanRow& ref : reference_architecture(config.variant, config.grid, image_h, image_w)) {
    auto it = std::find_if(plan.begin(), plan.end(), [&](const ShapePlanRow& r) { return r.name == ref.name; });
    if (it == plan.end()) {
      diffs.push_back({ref.name, describe(ref), "(missing)"});
    } else if (it->symbolic != ref.symbolic || it->shape != ref.shape) {
      diffs.push_back({ref.name, describe(ref), describe(*it)});
    }
  }
  return diffs;
}

}  // namespace plume
