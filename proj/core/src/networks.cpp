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

#include "plume/networks.hpp"

#include <cmath>

#include "plume/error.hpp"
#include "plume/ops.hpp"

namespace plume {

namespace {

void record(ForwardContext& ctx, const char* name, const Tensor& t) {
  if (ctx.trace) ctx.trace->emplace_back(name, t.shape());
}

void record(ForwardContext& ctx, const std::string& name, const Tensor& t) {
  if (ctx.trace) ctx.trace->emplace_back(name, t.shape());
}

Shape spatial_of(const Tensor& t) { return Shape(t.shape().begin() + 1, t.shape().end()); }

Tensor upsample_to(const Tensor& x, const Tensor& like) {
  return ops::upsample_bilinear(x, like.dim(1), like.dim(2));
}

constexpr std::array<std::size_t, 4> kPyramidWindows{64, 32, 16, 8};

}  // namespace

// ---- PLUME construction ------------------------------------------------------

FeatureVolume build_plume(const Tensor& left_features, const Tensor& right_features, const VoxelGridSpec& grid,
                          const CameraRig& feature_rig, bool concat_voxel_coords, bool require_both_cameras) {
  require(left_features.rank() == 3 && left_features.shape() == right_features.shape(), ErrorCode::kShapeMismatch,
          "stereo feature maps differ: " + shape_to_string(left_features.shape()) + " vs " +
              shape_to_string(right_features.shape()));
  const std::size_t H = left_features.dim(1);
  const std::size_t W = left_features.dim(2);
  require(feature_rig.image_w == static_cast<int>(W) && feature_rig.image_h == static_cast<int>(H),
          ErrorCode::kRigMismatch,
          "rig image size " + std::to_string(feature_rig.image_w) + "x" + std::to_string(feature_rig.image_h) +
              " does not match feature map " + std::to_string(W) + "x" + std::to_string(H));
  feature_rig.validate();

  const GridDims d = grid_dims(grid);
  const std::size_t n = d.count();
  std::vector<PixelCoord> left_px(n);
  std::vector<PixelCoord> right_px(n);
  std::vector<std::uint8_t> visible(n, 0);
  std::vector<double> coords;
  if (concat_voxel_coords) coords.assign(3 * n, 0.0);
  for (std::size_t i = 0; i < d.x; ++i) {
    for (std::size_t j = 0; j < d.y; ++j) {
      for (std::size_t k = 0; k < d.z; ++k) {
        const std::size_t idx = d.index(i, j, k);
        const Point3 c = voxel_center(grid, i, j, k);
        if (!in_fov(feature_rig, c, require_both_cameras)) continue;
        visible[idx] = 1;
        left_px[idx] = project_to_image(feature_rig, c);
        right_px[idx] = project_to_right(feature_rig, c);
        if (concat_voxel_coords) {
          coords[idx] = c.x;
          coords[n + idx] = c.y;
          coords[2 * n + idx] = c.z;
        }
      }
    }
  }
  std::vector<Tensor> parts{ops::gather_bilinear(left_features, left_px, visible),
                            ops::gather_bilinear(right_features, right_px, visible)};
  if (concat_voxel_coords) parts.emplace_back(Shape{3, n}, std::move(coords));
  Tensor stacked = ops::concat(parts, 0);
  const std::size_t channels = stacked.dim(0);
  return {ops::reshape(stacked, Shape{channels, d.x, d.y, d.z}), grid};
}

Tensor image_feature_fusion(const Tensor& left_features, const Tensor& right_features, const Tensor& occupancy,
                            const Tensor& bev_features, const VoxelGridSpec& grid, const CameraRig& feature_rig,
                            bool require_both_cameras) {
  const GridDims d = grid_dims(grid);
  require(occupancy.shape() == Shape{d.x, d.y, d.z}, ErrorCode::kShapeMismatch,
          "occupancy " + shape_to_string(occupancy.shape()) + " does not match grid");
  require(bev_features.rank() == 3 && bev_features.dim(1) == d.x && bev_features.dim(2) == d.z,
          ErrorCode::kShapeMismatch, "bev features " + shape_to_string(bev_features.shape()) + " do not match grid");
  FeatureVolume image_volume =
      build_plume(left_features, right_features, grid, feature_rig, false, require_both_cameras);
  Tensor weights = ops::reshape(occupancy, Shape{1, d.x, d.y, d.z});
  Tensor weighted = ops::mul(image_volume.values, weights);
  Tensor bev_image = ops::sum_axis(weighted, 2);
  return ops::concat({bev_features, bev_image}, 0);
}

// ---- stereo image network ------------------------------------------------------

StereoImageNet::StereoImageNet(const NetworkConfig& config, LayerFactory& f, const std::string& prefix)
    : config_(config) {
  const ChannelPlan p = config.plan();
  auto ch = [&](std::size_t c) { return config.channels(c); };
  const std::size_t c0 = ch(p.conv0);
  const std::size_t cm = ch(p.maxpool0);
  const std::array<std::size_t, 4> lc{ch(p.layer1), ch(p.layer2), ch(p.layer3), ch(p.layer4)};
  const std::size_t br = ch(p.branch);
  const std::size_t c1 = ch(p.conv1);
  const std::size_t fpn = ch(p.fpn);

  for (int i = 0; i < 3; ++i) conv0_.push_back(f.conv2d(prefix + "conv0." + std::to_string(i), i ? c0 : 3, c0, 3));
  maxpool_projects_ = cm != c0;
  if (maxpool_projects_) maxpool_proj_ = f.conv2d(prefix + "maxpool0.proj", c0, cm, 1);

  const std::array<std::size_t, 4> strides{1, 2, 1, 1};
  const std::array<std::size_t, 4> dilations{1, 1, 1, 2};
  std::size_t cin = cm;
  for (std::size_t l = 0; l < 4; ++l) {
    for (std::size_t b = 0; b < p.layer_blocks[l]; ++b) {
      layers_[l].push_back(f.basic_block(prefix + "layer" + std::to_string(l + 1) + "." + std::to_string(b),
                                         b ? lc[l] : cin, lc[l], b ? 1 : strides[l], dilations[l]));
    }
    cin = lc[l];
  }
  for (std::size_t i = 0; i < 4; ++i) branches_[i] = f.conv2d(prefix + "branch" + std::to_string(i + 1), lc[3], br, 3);
  conv1_ = f.conv2d(prefix + "conv1", lc[1] + lc[3] + 4 * br, c1, 3);
  conv2_ = f.conv2d(prefix + "conv2", c1, ch(p.conv2), 1);
  fpn_lateral2_ = f.conv2d(prefix + "fpn_conv2", c1, fpn, 1);
  fpn_lateral1_ = f.conv2d(prefix + "fpn_conv1", lc[0], fpn, 1);
  fpn_lateral0_ = f.conv2d(prefix + "fpn_conv0", c0, fpn, 1);

  const std::size_t target = static_cast<std::size_t>(config.feature_stride());
  for (std::size_t level = 0; level < 3; ++level) {
    const std::size_t source = std::size_t{1} << level;
    UpBranch& u = up_[level];
    const std::string name = prefix + "fpn_conv" + std::to_string(level) + "_up.";
    if (source > target) {
      u.upsample_stages = static_cast<std::size_t>(std::log2(static_cast<double>(source / target)));
      for (std::size_t s = 0; s < u.upsample_stages; ++s) u.convs.push_back(f.conv2d(name + std::to_string(s), fpn, fpn, 3));
    } else {
      u.convs.push_back(f.conv2d(name + "0", fpn, fpn, 3, target / source));
    }
  }
  fpn_conv_ = f.conv2d(prefix + "fpn_conv", fpn, ch(p.fpn_out), 3);
}

Tensor StereoImageNet::forward(const Tensor& image, ForwardContext& ctx) const {
  require(image.rank() == 3 && image.dim(0) == 3, ErrorCode::kShapeMismatch,
          "image must be [3, H, W], got " + shape_to_string(image.shape()));
  const std::size_t H = image.dim(1);
  const std::size_t W = image.dim(2);
  require(H % 4 == 0 && W % 4 == 0 && H >= 4 && W >= 4, ErrorCode::kShapeMismatch,
          "image height and width must be positive multiples of 4");
  record(ctx, "image", image);

  Tensor x = image;
  for (const ConvLayer& c : conv0_) x = ops::relu(c(x));
  const Tensor conv0 = x;
  record(ctx, "conv0", conv0);

  x = ops::max_pool2d(conv0, 3, 2, 1);
  if (maxpool_projects_) x = ops::relu(maxpool_proj_(x));
  record(ctx, "maxpool0", x);

  std::array<Tensor, 4> layer_out;
  for (std::size_t l = 0; l < 4; ++l) {
    for (const BasicBlock& b : layers_[l]) x = b(x);
    layer_out[l] = x;
    record(ctx, "layer" + std::to_string(l + 1), x);
  }

  const Tensor& l4 = layer_out[3];
  const std::size_t h4 = l4.dim(1);
  const std::size_t w4 = l4.dim(2);
  std::vector<Tensor> cat_parts{layer_out[1], l4};
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t kh = std::min(kPyramidWindows[i], h4);
    const std::size_t kw = std::min(kPyramidWindows[i], w4);
    Tensor b = ops::relu(branches_[i](ops::avg_pool2d(l4, kh, kw)));
    b = ops::upsample_bilinear(b, h4, w4);
    record(ctx, "branch" + std::to_string(i + 1), b);
    cat_parts.push_back(b);
  }
  const Tensor cat = ops::concat(cat_parts, 0);
  record(ctx, "concat", cat);
  const Tensor c1 = ops::relu(conv1_(cat));
  record(ctx, "conv1", c1);
  // conv2 has no consumer in the decoder (which reads conv1); it is only
  // evaluated when shapes are being traced.
  if (ctx.trace) record(ctx, "conv2", ops::relu(conv2_(c1)));

  auto up_branch = [&](std::size_t level, const Tensor& lateral) {
    const UpBranch& u = up_[level];
    Tensor y = lateral;
    for (std::size_t s = 0; s < u.convs.size(); ++s) {
      y = ops::relu(u.convs[s](y));
      if (s < u.upsample_stages) y = ops::upsample_bilinear(y, 2 * y.dim(1), 2 * y.dim(2));
    }
    record(ctx, "fpn_conv" + std::to_string(level) + "_up", y);
    return y;
  };
  std::array<Tensor, 3> ups;
  const Tensor p2 = fpn_lateral2_(c1);
  record(ctx, "fpn_conv2", p2);
  ups[2] = up_branch(2, p2);
  const Tensor p1 = ops::add(fpn_lateral1_(layer_out[0]), upsample_to(p2, layer_out[0]));
  record(ctx, "fpn_conv1", p1);
  ups[1] = up_branch(1, p1);
  const Tensor p0 = ops::add(fpn_lateral0_(conv0), upsample_to(p1, conv0));
  record(ctx, "fpn_conv0", p0);
  ups[0] = up_branch(0, p0);
  Tensor sum = ops::add(ops::add(ups[2], ups[1]), ups[0]);
  record(ctx, "fpn_sum", sum);
  if (ctx.train && config_.dropout > 0) {
    require(ctx.rng != nullptr, ErrorCode::kInvalidConfig, "training forward needs an RNG for dropout");
    sum = ops::dropout(sum, config_.dropout, true, *ctx.rng);
  }
  record(ctx, "dropout", sum);
  Tensor out = fpn_conv_(sum);
  record(ctx, "fpn_conv", out);
  return out;
}

// ---- 3D-BEV network -------------------------------------------------------------

VolumeNetwork::VolumeNetwork(const NetworkConfig& config, LayerFactory& f, const std::string& prefix)
    : config_(config) {
  const ChannelPlan p = config.plan();
  auto ch = [&](std::size_t c) { return config.channels(c); };
  const GridDims d = grid_dims(config.grid);
  y_cells_ = d.y;
  const std::size_t cv = config.volume_channels();
  const std::size_t c3 = ch(p.conv3d);

  if (config.volume_net != VolumeNet::kBevOnly) {
    conv3d_.push_back(f.conv3d(prefix + "3dconv0.0", cv, c3, 3, {1, 1, 1}));
    conv3d_.push_back(f.conv3d(prefix + "3dconv0.1", c3, c3, 3, {1, 1, 1}));
  }

  if (config.volume_net == VolumeNet::kPure3d) {
    // Every 2-D layer of the hourglass becomes 3-D; strides act on width and depth only.
    const std::size_t q0 = c3;
    const std::size_t q2 = ch(2 * p.conv3d);
    const std::vector<std::size_t> one{1, 1, 1};
    const std::vector<std::size_t> two{2, 1, 2};
    down_[0] = {f.conv3d(prefix + "bev_conv0.0", c3, q0, 3, one), f.conv3d(prefix + "bev_conv0.1", q0, q0, 3, one)};
    down_[1] = {f.conv3d(prefix + "bev_conv1.0", q0, q0, 3, one),
                f.conv3d(prefix + "bev_conv1.1", q0, q0, 3, one, kResidualBranchGain)};
    down_[2] = {f.conv3d(prefix + "bev_conv2.0", q0, q2, 3, two), f.conv3d(prefix + "bev_conv2.1", q2, q2, 3, one)};
    down_[3] = {f.conv3d(prefix + "bev_conv3.0", q2, q2, 3, two), f.conv3d(prefix + "bev_conv3.1", q2, q2, 3, one)};
    up4_ = {f.deconv(prefix + "bev_deconv4.0", 3, q2, q2, 3, two), f.conv3d(prefix + "bev_deconv4.1", q2, q2, 3, one)};
    up5_ = {f.deconv(prefix + "bev_deconv5.0", 3, q2, q0, 3, two), f.conv3d(prefix + "bev_deconv5.1", q0, q0, 3, one)};
    out_channels_ = q0 * y_cells_;
    return;
  }

  const std::size_t in2d = (config.volume_net == VolumeNet::kBevOnly ? cv : c3) * y_cells_;
  const std::size_t b0 = ch(p.bev);
  const std::size_t b2 = ch(p.bev_down);
  down_[0] = {f.conv2d(prefix + "bev_conv0.0", in2d, b0, 3), f.conv2d(prefix + "bev_conv0.1", b0, b0, 3)};
  down_[1] = {f.conv2d(prefix + "bev_conv1.0", b0, b0, 3),
              f.conv2d(prefix + "bev_conv1.1", b0, b0, 3, 1, 1, kResidualBranchGain)};
  down_[2] = {f.conv2d(prefix + "bev_conv2.0", b0, b2, 3, 2), f.conv2d(prefix + "bev_conv2.1", b2, b2, 3)};
  down_[3] = {f.conv2d(prefix + "bev_conv3.0", b2, b2, 3, 2), f.conv2d(prefix + "bev_conv3.1", b2, b2, 3)};
  up4_ = {f.deconv(prefix + "bev_deconv4.0", 2, b2, b2, 3, {2, 2}), f.conv2d(prefix + "bev_deconv4.1", b2, b2, 3)};
  up5_ = {f.deconv(prefix + "bev_deconv5.0", 2, b2, b0, 3, {2, 2}), f.conv2d(prefix + "bev_deconv5.1", b0, b0, 3)};
  out_channels_ = b0;
}

Tensor VolumeNetwork::hourglass(const Tensor& x, ForwardContext& ctx) const {
  const Tensor a = ops::relu(down_[0][1](ops::relu(down_[0][0](x))));
  record(ctx, "bev_conv0", a);
  const Tensor b = ops::relu(ops::add(down_[1][1](ops::relu(down_[1][0](a))), a));
  record(ctx, "bev_conv1", b);
  const Tensor c = ops::relu(down_[2][1](ops::relu(down_[2][0](b))));
  record(ctx, "bev_conv2", c);
  const Tensor d = ops::relu(down_[3][1](ops::relu(down_[3][0](c))));
  record(ctx, "bev_conv3", d);
  Tensor e = ops::relu(up4_[0].to_extent(d, spatial_of(c)));
  e = ops::relu(ops::add(up4_[1](e), c));
  record(ctx, "bev_deconv4", e);
  Tensor out = ops::relu(up5_[0].to_extent(e, spatial_of(b)));
  out = ops::relu(up5_[1](out));
  record(ctx, "bev_deconv5", out);
  return out;
}

Tensor VolumeNetwork::forward(const FeatureVolume& volume, ForwardContext& ctx) const {
  const GridDims d = grid_dims(config_.grid);
  const Tensor& v = volume.values;
  require(v.rank() == 4 && v.dim(0) == config_.volume_channels() && v.dim(1) == d.x && v.dim(2) == d.y &&
              v.dim(3) == d.z,
          ErrorCode::kShapeMismatch, "feature volume " + shape_to_string(v.shape()) + " does not match config");
  auto flatten = [&](const Tensor& t) {
    // [C, X, Y, Z] -> [C * Y, X, Z] with channel index c * Y + y.
    return ops::reshape(ops::permute(t, {0, 2, 1, 3}), Shape{t.dim(0) * d.y, d.x, d.z});
  };

  if (config_.volume_net == VolumeNet::kBevOnly) {
    const Tensor flat = flatten(v);
    record(ctx, "reshape", flat);
    return hourglass(flat, ctx);
  }
  Tensor x = ops::relu(conv3d_[1](ops::relu(conv3d_[0](v))));
  record(ctx, "3dconv0", x);
  if (config_.volume_net == VolumeNet::kPure3d) {
    const Tensor flat = flatten(hourglass(x, ctx));
    record(ctx, "reshape", flat);
    return flat;
  }
  const Tensor flat = flatten(x);
  record(ctx, "reshape", flat);
  return hourglass(flat, ctx);
}

// ---- headers ---------------------------------------------------------------------

OccupancyHead::OccupancyHead(const NetworkConfig& config, LayerFactory& f, const std::string& prefix,
                             std::size_t in_channels)
    : dims_(grid_dims(config.grid)) {
  const std::size_t hidden = config.channels(config.plan().occ_hidden);
  conv3_ = f.conv2d(prefix + "conv3", in_channels, hidden, 3);
  conv4_ = f.conv2d(prefix + "conv4", hidden, dims_.y, 3);
}

Tensor OccupancyHead::logits(const Tensor& bev, ForwardContext& ctx) const {
  require(bev.rank() == 3 && bev.dim(1) == dims_.x && bev.dim(2) == dims_.z, ErrorCode::kShapeMismatch,
          "occupancy head input " + shape_to_string(bev.shape()) + " does not match grid");
  const Tensor h = ops::relu(conv3_(bev));
  record(ctx, "conv3", h);
  const Tensor per_height = conv4_(h);  // [Y, X, Z]
  record(ctx, "conv4", per_height);
  return ops::permute(per_height, {1, 0, 2});
}

DetectionHead::DetectionHead(const NetworkConfig& config, LayerFactory& f, const std::string& prefix,
                             std::size_t in_channels) {
  const ChannelPlan p = config.plan();
  std::array<std::size_t, 5> c{};
  for (std::size_t i = 0; i < 5; ++i) c[i] = config.channels(p.det_channels[i]);
  for (std::size_t i = 0; i < p.det_layers[0]; ++i) {
    block1_.push_back(f.conv2d(prefix + "block1." + std::to_string(i), i ? c[0] : in_channels, c[0], 3));
  }
  for (std::size_t b = 0; b < 4; ++b) {
    for (std::size_t i = 0; i < p.det_layers[b + 1]; ++i) {
      blocks_[b].push_back(f.bottleneck(prefix + "block" + std::to_string(b + 2) + "." + std::to_string(i),
                                        i ? c[b + 1] : c[b], c[b + 1], i ? 1 : 2));
    }
  }
  const std::size_t fd = c[1];
  lateral5_ = f.conv2d(prefix + "fpn.lateral5", c[4], fd, 1);
  lateral4_ = f.conv2d(prefix + "fpn.lateral4", c[3], fd, 1);
  lateral3_ = f.conv2d(prefix + "fpn.lateral3", c[2], fd, 1);
  fuse_ = f.conv2d(prefix + "fpn.fuse", fd, fd, 3);
  cls_hidden_ = f.conv2d(prefix + "cls.hidden", fd, fd, 3);
  cls_out_ = f.conv2d(prefix + "cls.out", fd, 1, 1, 1, 1, 0.1);
  reg_hidden_ = f.conv2d(prefix + "reg.hidden", fd, fd, 3);
  reg_out_ = f.conv2d(prefix + "reg.out", fd, 6, 1, 1, 1, 0.1);
  // Background prior of 0.99 keeps the initial focal loss from being dominated by negatives.
  cls_out_.bias.mutable_data()[0] = -std::log((1.0 - 0.01) / 0.01);
}

DenseDetections DetectionHead::forward(const Tensor& bev, ForwardContext& ctx) const {
  require(bev.rank() == 3 && bev.dim(1) % 16 == 0 && bev.dim(2) % 16 == 0, ErrorCode::kShapeMismatch,
          "detection head input must be [C, X, Z] with X, Z multiples of 16, got " + shape_to_string(bev.shape()));
  Tensor x = bev;
  for (const ConvLayer& c : block1_) x = ops::relu(c(x));
  record(ctx, "det_block1", x);
  std::array<Tensor, 4> outs;
  for (std::size_t b = 0; b < 4; ++b) {
    for (const BottleneckBlock& blk : blocks_[b]) x = blk(x);
    outs[b] = x;
    record(ctx, "det_block" + std::to_string(b + 2), x);
  }
  Tensor t = lateral5_(outs[3]);
  t = ops::add(upsample_to(t, outs[2]), lateral4_(outs[2]));
  t = ops::add(upsample_to(t, outs[1]), lateral3_(outs[1]));
  t = ops::relu(fuse_(t));
  record(ctx, "det_fpn", t);
  DenseDetections out;
  out.class_logits = cls_out_(ops::relu(cls_hidden_(t)));
  record(ctx, "det_cls", out.class_logits);
  out.regression = reg_out_(ops::relu(reg_hidden_(t)));
  record(ctx, "det_reg", out.regression);
  return out;
}

// ---- full model -------------------------------------------------------------------

PlumeModel::PlumeModel(NetworkConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  LayerFactory f(params_, rng);
  stereo_left_ = std::make_unique<StereoImageNet>(config_, f, kStereoPrefix);
  if (!config_.share_stereo_weights) stereo_right_ = std::make_unique<StereoImageNet>(config_, f, kStereoRightPrefix);
  volume_ = std::make_unique<VolumeNetwork>(config_, f, kVolumePrefix);
  occupancy_ = std::make_unique<OccupancyHead>(config_, f, kOccupancyPrefix, volume_->output_channels());
  const std::size_t det_in = volume_->output_channels() + (config_.fusion_enabled ? 2 * config_.image_channels() : 0);
  detection_ = std::make_unique<DetectionHead>(config_, f, kDetectionPrefix, det_in);
}

Tensor PlumeModel::stereo_forward(const Tensor& image, bool right_camera, ForwardContext& ctx) const {
  const StereoImageNet& net = (right_camera && stereo_right_) ? *stereo_right_ : *stereo_left_;
  return net.forward(image, ctx);
}

FeatureVolume PlumeModel::build_volume(const Tensor& left_features, const Tensor& right_features,
                                       const CameraRig& feature_rig, ForwardContext& ctx) const {
  FeatureVolume v = build_plume(left_features, right_features, config_.grid, feature_rig, config_.concat_voxel_coords,
                                config_.require_both_cameras);
  record(ctx, "plume", v.values);
  return v;
}

Tensor PlumeModel::volume_forward(const FeatureVolume& volume, ForwardContext& ctx) const {
  return volume_->forward(volume, ctx);
}

Tensor PlumeModel::occupancy_logits(const Tensor& bev, ForwardContext& ctx) const {
  return occupancy_->logits(bev, ctx);
}

DenseDetections PlumeModel::detection_head(const Tensor& detection_input, ForwardContext& ctx) const {
  return detection_->forward(detection_input, ctx);
}

BackboneOutputs PlumeModel::backbone(const Tensor& left_image, const Tensor& right_image, const CameraRig& rig,
                                     ForwardContext& ctx) const {
  require(left_image.rank() == 3 && left_image.shape() == right_image.shape(), ErrorCode::kShapeMismatch,
          "stereo images differ in shape");
  require(rig.image_w == static_cast<int>(left_image.dim(2)) && rig.image_h == static_cast<int>(left_image.dim(1)),
          ErrorCode::kRigMismatch, "rig image size does not match the images");
  BackboneOutputs out;
  out.feature_rig = rig.downscaled(config_.feature_stride());
  out.left_features = stereo_forward(left_image, false, ctx);
  ForwardContext right_ctx = ctx;
  right_ctx.trace = nullptr;
  out.right_features = stereo_forward(right_image, true, right_ctx);
  out.volume = build_volume(out.left_features, out.right_features, out.feature_rig, ctx);
  out.bev = volume_forward(out.volume, ctx);
  out.occupancy_logits = occupancy_logits(out.bev, ctx);
  out.occupancy = ops::sigmoid(out.occupancy_logits);
  return out;
}

Tensor PlumeModel::detection_input(const BackboneOutputs& b) const {
  if (!config_.fusion_enabled) return b.bev;
  return image_feature_fusion(b.left_features, b.right_features, b.occupancy, b.bev, config_.grid, b.feature_rig,
                              config_.require_both_cameras);
}

}  // namespace plume
