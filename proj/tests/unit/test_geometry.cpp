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

#include "plume/error.hpp"
#include "plume/geometry.hpp"

namespace plume {
namespace {

CameraRig desk_rig() {
  CameraRig rig;
  rig.fx = 100;
  rig.fy = 100;
  rig.cx = 50;
  rig.cy = 40;
  rig.baseline = 0.5;
  rig.image_w = 101;
  rig.image_h = 81;
  return rig;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kIoError;
}

TEST(Geometry, OpticalAxisMapsToPrincipalPoint) {
  const PixelCoord px = project_to_image(desk_rig(), {0, 0, 10});
  EXPECT_EQ(px.u, 50);
  EXPECT_EQ(px.v, 40);
}

TEST(Geometry, LateralOffsetProjection) {
  const PixelCoord px = project_to_image(desk_rig(), {1, 0, 10});
  EXPECT_DOUBLE_EQ(px.u, 60);
  EXPECT_DOUBLE_EQ(px.v, 40);
}

TEST(Geometry, BehindCameraThrows) {
  EXPECT_EQ(code_of([] { project_to_image(desk_rig(), {0, 0, -1}); }), ErrorCode::kNonPositiveDepth);
  EXPECT_EQ(code_of([] { project_to_right(desk_rig(), {0, 0, 0}); }), ErrorCode::kNonPositiveDepth);
}

TEST(Geometry, RightProjectionShiftsByDisparity) {
  const CameraRig rig = desk_rig();
  const PixelCoord r = project_to_right(rig, {0, 0, 10});
  EXPECT_DOUBLE_EQ(r.u, 45);
  EXPECT_DOUBLE_EQ(r.v, 40);
}

TEST(Geometry, ZeroBaselineRightEqualsLeft) {
  CameraRig rig = desk_rig();
  rig.baseline = 0.0;
  const Point3 p{0.7, -0.3, 6.0};
  const PixelCoord l = project_to_image(rig, p);
  const PixelCoord r = project_to_right(rig, p);
  EXPECT_EQ(l.u, r.u);
  EXPECT_EQ(l.v, r.v);
}

TEST(Geometry, RectifiedRowsAgree) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-5, 5);
  const CameraRig rig = desk_rig();
  for (int n = 0; n < 200; ++n) {
    const Point3 p{d(rng), d(rng), 0.5 + std::abs(d(rng)) * 10};
    EXPECT_EQ(project_to_image(rig, p).v, project_to_right(rig, p).v);
  }
}

TEST(Geometry, DepthDisparityExample) {
  EXPECT_DOUBLE_EQ(depth_to_disparity(desk_rig(), 10.0), 5.0);
  EXPECT_DOUBLE_EQ(disparity_to_depth(desk_rig(), 5.0), 10.0);
  EXPECT_EQ(code_of([] { depth_to_disparity(desk_rig(), 0.0); }), ErrorCode::kNonPositive);
  EXPECT_EQ(code_of([] { disparity_to_depth(desk_rig(), -1.0); }), ErrorCode::kNonPositive);
}

TEST(Geometry, DepthDisparityRoundTrip) {
  const CameraRig rig = desk_rig();
  EXPECT_NEAR(disparity_to_depth(rig, depth_to_disparity(rig, 7.3)), 7.3, 7.3e-12);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(0.1, 200.0);
  for (int n = 0; n < 10000; ++n) {
    const double z = d(rng);
    EXPECT_LT(std::abs(disparity_to_depth(rig, depth_to_disparity(rig, z)) - z) / z, 1e-12);
  }
}

TEST(Geometry, DisparityDecreasesWithDepth) {
  const CameraRig rig = desk_rig();
  double previous = depth_to_disparity(rig, 0.5);
  for (double z = 1.0; z < 1e6; z *= 1.7) {
    const double d = depth_to_disparity(rig, z);
    EXPECT_LT(d, previous);
    EXPECT_GT(d, 0.0);
    previous = d;
  }
}

TEST(Geometry, ProjectionLinearInX) {
  const CameraRig rig = desk_rig();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-3, 3);
  for (int n = 0; n < 1000; ++n) {
    const double x = d(rng);
    const double delta = d(rng);
    const double z = 1 + std::abs(d(rng)) * 5;
    const double du = project_to_image(rig, {x + delta, 0, z}).u - project_to_image(rig, {x, 0, z}).u;
    EXPECT_NEAR(du, rig.fx * delta / z, 1e-12 * (1 + std::abs(rig.fx * (x + delta) / z)));
  }
}

TEST(Geometry, FieldOfViewExamples) {
  const CameraRig rig = desk_rig();
  EXPECT_TRUE(in_fov(rig, {0, 0, 10}));
  EXPECT_FALSE(in_fov(rig, {0, 0, -1}));
  // u = 100 * x / 10 + 50 = image_w + 3
  EXPECT_FALSE(in_fov(rig, {(rig.image_w + 3 - 50) / 10.0, 0, 10}, false));
}

TEST(Geometry, BothCamerasImpliesLeft) {
  const CameraRig rig = desk_rig();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(-10, 10);
  int right_only_rejections = 0;
  for (int n = 0; n < 20000; ++n) {
    const Point3 p{d(rng), d(rng), d(rng) + 5};
    const bool both = in_fov(rig, p, true);
    const bool left = in_fov(rig, p, false);
    if (both) EXPECT_TRUE(left);
    right_only_rejections += left && !both;
  }
  EXPECT_GT(right_only_rejections, 0);
}

TEST(Geometry, UnprojectInvertsProjection) {
  const CameraRig rig = desk_rig();
  const Point3 p{1.25, -0.5, 8.0};
  const Point3 q = unproject(rig, project_to_image(rig, p), p.z);
  EXPECT_NEAR(q.x, p.x, 1e-12);
  EXPECT_NEAR(q.y, p.y, 1e-12);
  EXPECT_EQ(q.z, p.z);
}

TEST(Geometry, ValidateRejectsBadRigs) {
  CameraRig rig = desk_rig();
  rig.fx = 0;
  EXPECT_EQ(code_of([&] { rig.validate(); }), ErrorCode::kInvalidSpec);
  rig = desk_rig();
  rig.baseline = -1;
  EXPECT_EQ(code_of([&] { rig.validate(); }), ErrorCode::kInvalidSpec);
  rig = desk_rig();
  rig.image_h = 0;
  EXPECT_EQ(code_of([&] { rig.validate(); }), ErrorCode::kInvalidSpec);
}

TEST(Geometry, DownscaledRigKeepsDisparityInPixelsOfNewResolution) {
  const CameraRig rig = desk_rig();
  const CameraRig half = rig.downscaled(2);
  EXPECT_DOUBLE_EQ(half.fx, rig.fx / 2);
  EXPECT_DOUBLE_EQ(depth_to_disparity(half, 10.0), depth_to_disparity(rig, 10.0) / 2);
  EXPECT_EQ(half.baseline, rig.baseline);
}

}  // namespace
}  // namespace plume
