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


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "plume/error.hpp"
#include "plume/harness.hpp"
#include "plume/networks.hpp"
#include "plume/ops.hpp"

namespace plume {
namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kIoError;
}

const ShapePlanRow& row(const std::vector<ShapePlanRow>& plan, const std::string& name) {
  for (const auto& r : plan) {
    if (r.name == name) return r;
  }
  throw std::runtime_error("no row " + name);
}

TEST(Config, DetectionPlanOfSmall) {
  const ChannelPlan p = channel_plan(Variant::kSmall);
  EXPECT_EQ(p.det_layers, (std::array<std::size_t, 5>{2, 3, 6, 6, 3}));
  EXPECT_EQ(p.det_channels, (std::array<std::size_t, 5>{32, 96, 128, 192, 192}));
}

TEST(Config, PlumeHas64Channels) {
  NetworkConfig c;
  EXPECT_EQ(c.volume_channels(), 64u);
  c.concat_voxel_coords = true;
  EXPECT_EQ(c.volume_channels(), 67u);
}

TEST(Config, ScaleRoundsUpToAtLeastFour) {
  NetworkConfig c;
  c.scale = 0.125;
  EXPECT_EQ(c.channels(32), 4u);
  EXPECT_EQ(c.channels(96), 12u);
  EXPECT_EQ(c.channels(100), 13u);
  c.scale = 0.01;
  EXPECT_EQ(c.channels(32), 4u);
}

TEST(Config, JsonRoundTripAndUnknownKeys) {
  NetworkConfig c = parse_network_config(R"({"variant": "middle", "volume_net": "bev_only", "scale": 0.5,
      "image_feature_resolution": "half", "grid": {"x_range": [-4, 4], "y_range": [0, 1], "z_range": [2, 10],
      "resolution": 0.5}})");
  EXPECT_EQ(c.variant, Variant::kMiddle);
  EXPECT_EQ(c.volume_net, VolumeNet::kBevOnly);
  EXPECT_EQ(c.image_feature_resolution, FeatureResolution::kHalf);
  EXPECT_EQ(grid_dims(c.grid), (GridDims{16, 2, 16}));
  const NetworkConfig back = parse_network_config(network_config_to_json(c));
  EXPECT_EQ(network_config_to_json(back), network_config_to_json(c));
  EXPECT_EQ(code_of([] { parse_network_config(R"({"varient": "small"})"); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([] { parse_network_config(R"({"scale": -1})"); }), ErrorCode::kInvalidConfig);
}

TEST(ShapePlan, ReferenceRowsForAllSizes) {
  for (Variant v : {Variant::kSmall, Variant::kMiddle, Variant::kLarge}) {
    NetworkConfig c;
    c.variant = v;
    EXPECT_TRUE(has_reference(c));
    EXPECT_TRUE(diff_against_reference(c, 384, 1248).empty()) << to_string(v);
  }
}

TEST(ShapePlan, KnownRows) {
  const std::array<std::size_t, 3> bev{96, 160, 256};
  const std::array<Variant, 3> variants{Variant::kSmall, Variant::kMiddle, Variant::kLarge};
  for (std::size_t n = 0; n < 3; ++n) {
    NetworkConfig c;
    c.variant = variants[n];
    const auto plan = shape_plan(c, 384, 1248);
    EXPECT_EQ(row(plan, "fpn_conv").shape, (Shape{32, 384, 1248}));
    EXPECT_EQ(row(plan, "plume").shape, (Shape{64, 320, 15, 304}));
    EXPECT_EQ(row(plan, "bev_conv0").shape, (Shape{bev[n], 320, 304}));
    EXPECT_EQ(row(plan, "conv4").shape, (Shape{15, 320, 304}));
    EXPECT_EQ(row(plan, "det_cls").shape, (Shape{1, 80, 76}));
    EXPECT_EQ(row(plan, "det_block5").shape[1], 320u / 16);
    EXPECT_EQ(row(plan, "det_block5").shape[2], 304u / 16);
  }
  NetworkConfig small;
  EXPECT_EQ(row(shape_plan(small, 384, 1248), "reshape").shape, (Shape{180, 320, 304}));
}

TEST(ShapePlan, ReducedResolutionModes) {
  NetworkConfig c;
  c.image_feature_resolution = FeatureResolution::kHalf;
  EXPECT_EQ(row(shape_plan(c, 64, 128), "fpn_conv").shape, (Shape{32, 32, 64}));
  EXPECT_FALSE(has_reference(c));
  c.image_feature_resolution = FeatureResolution::kQuarter;
  EXPECT_EQ(row(shape_plan(c, 64, 128), "fpn_conv").shape, (Shape{32, 16, 32}));
  c.variant = Variant::kLarge;
  EXPECT_EQ(row(shape_plan(c, 64, 128), "fpn_conv").shape[0], 32u);
}

TEST(ShapePlan, RejectsIndivisibleImages) {
  EXPECT_EQ(code_of([] { shape_plan(NetworkConfig{}, 63, 128); }), ErrorCode::kInvalidConfig);
}

TEST(Networks, SmallStereoOutputAtFullResolution) {
  NetworkConfig c;
  c.dropout = 0;
  PlumeModel model(c, 1);
  std::mt19937_64 rng(2);
  ForwardContext ctx;
  const Tensor out = model.stereo_forward(oracle::random_map(rng, 3, 64, 128), false, ctx);
  EXPECT_EQ(out.shape(), (Shape{32, 64, 128}));
}

NetworkConfig tiny_config() {
  NetworkConfig c = toy_network_config(0.25);
  c.grid.x_range = {-4, 4};
  c.grid.y_range = {-0.5, 1.5};
  c.grid.z_range = {2, 10};
  c.grid.resolution = 0.5;
  return c;
}

CameraRig tiny_rig() {
  CameraRig rig;
  rig.fx = rig.fy = 16;
  rig.cx = 15.5;
  rig.cy = 7.5;
  rig.baseline = 0.5;
  rig.image_w = 32;
  rig.image_h = 16;
  return rig;
}

TEST(Networks, ExecutedShapesMatchPlan) {
  std::vector<NetworkConfig> configs;
  for (auto res : {FeatureResolution::kFull, FeatureResolution::kHalf, FeatureResolution::kQuarter}) {
    for (auto vol : {VolumeNet::kHybrid3dBev, VolumeNet::kBevOnly, VolumeNet::kPure3d}) {
      NetworkConfig c = tiny_config();
      c.image_feature_resolution = res;
      c.volume_net = vol;
      configs.push_back(c);
    }
  }
  configs.push_back(tiny_config());
  configs.back().variant = Variant::kMiddle;
  configs.back().fusion_enabled = true;
  configs.back().concat_voxel_coords = true;
  std::mt19937_64 rng(3);
  for (const NetworkConfig& c : configs) {
    PlumeModel model(c, 4);
    ShapeTrace trace;
    ForwardContext ctx;
    ctx.trace = &trace;
    const CameraRig rig = tiny_rig();
    const auto b = model.backbone(oracle::random_map(rng, 3, 16, 32), oracle::random_map(rng, 3, 16, 32), rig, ctx);
    model.detection_head(model.detection_input(b), ctx);
    const auto plan = shape_plan(c, 16, 32);
    ASSERT_EQ(trace.size(), plan.size()) << network_config_to_json(c);
    for (std::size_t i = 0; i < plan.size(); ++i) {
      EXPECT_EQ(trace[i].first, plan[i].name);
      EXPECT_EQ(trace[i].second, plan[i].shape) << plan[i].name << " in " << network_config_to_json(c);
    }
    EXPECT_EQ(b.occupancy.shape(), (Shape{16, 4, 16}));
  }
}

TEST(Networks, UnsharedEncoderHasOwnParameters) {
  NetworkConfig c = tiny_config();
  PlumeModel shared(c, 1);
  c.share_stereo_weights = false;
  PlumeModel split(c, 1);
  EXPECT_TRUE(shared.parameters().with_prefix(kStereoRightPrefix).empty());
  EXPECT_EQ(split.parameters().with_prefix(kStereoRightPrefix).size(),
            split.parameters().with_prefix(kStereoPrefix).size());
}

TEST(Networks, ZeroOccupancyHeadGivesHalf) {
  NetworkConfig c = tiny_config();
  PlumeModel model(c, 1);
  for (const auto& [name, t] : model.parameters().entries()) {
    if (name.rfind(kOccupancyPrefix, 0) == 0) {
      Tensor w = t;
      for (double& v : w.mutable_data()) v = 0;
    }
  }
  std::mt19937_64 rng(5);
  ForwardContext ctx;
  const auto b = model.backbone(oracle::random_map(rng, 3, 16, 32), oracle::random_map(rng, 3, 16, 32), tiny_rig(), ctx);
  for (double p : b.occupancy.data()) EXPECT_EQ(p, 0.5);
}

TEST(Networks, ForwardIsDeterministic) {
  NetworkConfig c = tiny_config();
  c.dropout = 0.2;
  std::mt19937_64 rng(6);
  const Tensor l = oracle::random_map(rng, 3, 16, 32), r = oracle::random_map(rng, 3, 16, 32);
  auto run = [&] {
    PlumeModel model(c, 9);
    std::mt19937_64 drop(1);
    ForwardContext ctx;
    ctx.train = true;
    ctx.rng = &drop;
    const auto b = model.backbone(l, r, tiny_rig(), ctx);
    const auto d = model.detection_head(model.detection_input(b), ctx);
    std::vector<double> out(b.occupancy.data().begin(), b.occupancy.data().end());
    out.insert(out.end(), d.regression.data().begin(), d.regression.data().end());
    return out;
  };
  EXPECT_EQ(run(), run());
}

// ---- PLUME construction ---------------------------------------------------

TEST(Plume, MatchesPerVoxelOracle) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const CameraRig rig = oracle::random_rig(rng);
    const VoxelGridSpec g = oracle::random_grid(rng, 6, 3, 6);
    const Tensor l = oracle::random_map(rng, 3, rig.image_h, rig.image_w);
    const Tensor r = oracle::random_map(rng, 3, rig.image_h, rig.image_w);
    for (bool coords : {false, true}) {
      const FeatureVolume v = build_plume(l, r, g, rig, coords);
      const auto ref = oracle::plume_volume(l, r, g, rig, coords);
      ASSERT_EQ(v.values.numel(), ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(v.values.data()[i], ref[i], 1e-12);
    }
  }
}

TEST(Plume, IntegerPixelsGiveExactConcatenation) {
  // fx = fy = 10, z = 5: voxel (x, y) = (0.5 n, 0.5 m) lands on pixel (cx + n, cy + m); disparity 1.
  CameraRig rig;
  rig.fx = rig.fy = 10;
  rig.cx = 4;
  rig.cy = 3;
  rig.baseline = 0.5;
  rig.image_w = 9;
  rig.image_h = 7;
  VoxelGridSpec g;
  g.x_range = {-0.25, 0.25};
  g.y_range = {-0.25, 0.25};
  g.z_range = {4.75, 5.25};
  g.resolution = 0.5;
  std::mt19937_64 rng(11);
  const Tensor l = oracle::random_map(rng, 2, 7, 9), r = oracle::random_map(rng, 2, 7, 9);
  const FeatureVolume v = build_plume(l, r, g, rig, false);
  ASSERT_EQ(v.values.shape(), (Shape{4, 1, 1, 1}));
  EXPECT_EQ(v.values.data()[0], l.data()[3 * 9 + 4]);
  EXPECT_EQ(v.values.data()[1], l.data()[63 + 3 * 9 + 4]);
  EXPECT_EQ(v.values.data()[2], r.data()[3 * 9 + 3]);
  EXPECT_EQ(v.values.data()[3], r.data()[63 + 3 * 9 + 3]);
}

TEST(Plume, VoxelsBehindCameraAreZero) {
  CameraRig rig = tiny_rig();
  VoxelGridSpec g;
  g.x_range = {-1, 1};
  g.y_range = {-1, 1};
  g.z_range = {-3, 3};
  g.resolution = 1;
  std::mt19937_64 rng(12);
  const FeatureVolume v = build_plume(oracle::random_map(rng, 2, 16, 32), oracle::random_map(rng, 2, 16, 32), g, rig,
                                      true);
  const GridDims d = grid_dims(g);
  for (std::size_t i = 0; i < d.x; ++i) {
    for (std::size_t j = 0; j < d.y; ++j) {
      for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t c = 0; c < 7; ++c) EXPECT_EQ(v.values.data()[c * d.count() + d.index(i, j, k)], 0.0);
      }
    }
  }
}

TEST(Plume, RejectsMismatchedInputs) {
  const CameraRig rig = tiny_rig();
  const VoxelGridSpec g = tiny_config().grid;
  EXPECT_EQ(code_of([&] { build_plume(Tensor(Shape{2, 16, 32}), Tensor(Shape{2, 16, 31}), g, rig, false); }),
            ErrorCode::kShapeMismatch);
  EXPECT_EQ(code_of([&] { build_plume(Tensor(Shape{2, 8, 16}), Tensor(Shape{2, 8, 16}), g, rig, false); }),
            ErrorCode::kRigMismatch);
}

TEST(Plume, DependsOnlyOnBilinearFootprints) {
  std::mt19937_64 rng(13);
  const CameraRig rig = oracle::random_rig(rng);
  const VoxelGridSpec g = oracle::random_grid(rng, 4, 3, 4);
  const GridDims d = grid_dims(g);
  const Tensor l = oracle::random_map(rng, 1, rig.image_h, rig.image_w);
  const Tensor r = oracle::random_map(rng, 1, rig.image_h, rig.image_w);
  const auto base = build_plume(l, r, g, rig, false).values;
  auto touches = [&](double u, double v, int px, int py) {
    return std::abs(px - u) < 1 && std::abs(py - v) < 1;
  };
  for (int py = 0; py < rig.image_h; ++py) {
    for (int px = 0; px < rig.image_w; ++px) {
      Tensor bumped = l.detach();
      bumped.mutable_data()[static_cast<std::size_t>(py * rig.image_w + px)] += 10.0;
      const auto moved = build_plume(bumped, r, g, rig, false).values;
      for (std::size_t i = 0; i < d.x; ++i) {
        for (std::size_t j = 0; j < d.y; ++j) {
          for (std::size_t k = 0; k < d.z; ++k) {
            const std::size_t at = d.index(i, j, k);
            if (moved.data()[at] == base.data()[at]) continue;
            const Point3 c = voxel_center(g, i, j, k);
            const PixelCoord p = project_to_image(rig, c);
            EXPECT_TRUE(touches(p.u, p.v, px, py)) << "pixel " << px << "," << py;
          }
        }
      }
    }
  }
}

TEST(Plume, GridTranslationShiftsVolume) {
  CameraRig rig = tiny_rig();
  VoxelGridSpec g;
  g.x_range = {-4, 2};
  g.y_range = {-0.5, 1.5};
  g.z_range = {3, 9};
  g.resolution = 0.5;
  VoxelGridSpec shifted = g;
  shifted.x_range = {-3.5, 2.5};
  std::mt19937_64 rng(14);
  const Tensor l = oracle::random_map(rng, 2, 16, 32), r = oracle::random_map(rng, 2, 16, 32);
  const auto a = build_plume(l, r, g, rig, false).values;
  const auto b = build_plume(l, r, shifted, rig, false).values;
  const GridDims d = grid_dims(g);
  std::size_t compared = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i + 1 < d.x; ++i) {
      for (std::size_t j = 0; j < d.y; ++j) {
        for (std::size_t k = 0; k < d.z; ++k) {
          if (!in_fov(rig, voxel_center(shifted, i, j, k))) continue;
          EXPECT_EQ(b.data()[c * d.count() + d.index(i, j, k)], a.data()[c * d.count() + d.index(i + 1, j, k)]);
          ++compared;
        }
      }
    }
  }
  EXPECT_GT(compared, 100u);
}

TEST(Fusion, ZeroOccupancyAddsZeroChannels) {
  const CameraRig rig = tiny_rig();
  const VoxelGridSpec g = tiny_config().grid;
  const GridDims d = grid_dims(g);
  std::mt19937_64 rng(15);
  const Tensor l = oracle::random_map(rng, 3, 16, 32), r = oracle::random_map(rng, 3, 16, 32);
  const Tensor bev = oracle::random_map(rng, 5, d.x, d.z);
  const Tensor fused = image_feature_fusion(l, r, Tensor(Shape{d.x, d.y, d.z}, 0.0), bev, g, rig);
  ASSERT_EQ(fused.shape(), (Shape{11, d.x, d.z}));
  for (std::size_t n = 0; n < bev.numel(); ++n) EXPECT_EQ(fused.data()[n], bev.data()[n]);
  for (std::size_t n = bev.numel(); n < fused.numel(); ++n) EXPECT_EQ(fused.data()[n], 0.0);
}

TEST(Fusion, MatchesWeightedHeightSum) {
  const CameraRig rig = tiny_rig();
  const VoxelGridSpec g = tiny_config().grid;
  const GridDims d = grid_dims(g);
  std::mt19937_64 rng(16);
  const Tensor l = oracle::random_map(rng, 2, 16, 32), r = oracle::random_map(rng, 2, 16, 32);
  const Tensor bev = oracle::random_map(rng, 1, d.x, d.z);
  std::vector<double> occ(d.count());
  for (double& o : occ) o = oracle::uniform(rng, 0, 1);
  const Tensor fused = image_feature_fusion(l, r, Tensor(Shape{d.x, d.y, d.z}, occ), bev, g, rig);
  const auto volume = oracle::plume_volume(l, r, g, rig, false);
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < d.x; ++i) {
      for (std::size_t k = 0; k < d.z; ++k) {
        double s = 0;
        for (std::size_t j = 0; j < d.y; ++j) s += occ[d.index(i, j, k)] * volume[c * d.count() + d.index(i, j, k)];
        EXPECT_NEAR(fused.data()[((1 + c) * d.x + i) * d.z + k], s, 1e-12);
      }
    }
  }
  // One-hot occupancy selects that voxel's warped feature.
  std::vector<double> one_hot(d.count(), 0.0);
  const std::size_t at = d.index(8, 2, 6);
  one_hot[at] = 1.0;
  const Tensor single = image_feature_fusion(l, r, Tensor(Shape{d.x, d.y, d.z}, one_hot), bev, g, rig);
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_NEAR(single.data()[((1 + c) * d.x + 8) * d.z + 6], volume[c * d.count() + at], 1e-15);
  }
}

}  // namespace
}  // namespace plume
