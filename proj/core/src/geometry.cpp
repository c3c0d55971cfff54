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

#include "plume/geometry.hpp"

#include <cmath>
#include <string>

#include "plume/error.hpp"

namespace plume {

void CameraRig::validate() const {
  require(fx > 0 && fy > 0, ErrorCode::kInvalidSpec, "focal lengths must be positive");
  require(baseline > 0, ErrorCode::kInvalidSpec, "baseline must be positive");
  require(image_w >= 1 && image_h >= 1, ErrorCode::kInvalidSpec, "image size must be >= 1");
}

CameraRig CameraRig::downscaled(int factor) const {
  require(factor >= 1, ErrorCode::kInvalidSpec, "downscale factor must be >= 1");
  if (factor == 1) return *this;
  const double s = 1.0 / factor;
  CameraRig out = *this;
  out.fx = fx * s;
  out.fy = fy * s;
  out.cx = cx * s;
  out.cy = cy * s;
  out.image_w = image_w / factor;
  out.image_h = image_h / factor;
  return out;
}

PixelCoord project_to_image(const CameraRig& rig, const Point3& p) {
  if (!(p.z > 0)) fail(ErrorCode::kNonPositiveDepth, "z = " + std::to_string(p.z));
  return {rig.fx * p.x / p.z + rig.cx, rig.fy * p.y / p.z + rig.cy};
}

PixelCoord project_to_right(const CameraRig& rig, const Point3& p) {
  PixelCoord left = project_to_image(rig, p);
  left.u -= rig.fx * rig.baseline / p.z;
  return left;
}

double depth_to_disparity(const CameraRig& rig, double depth) {
  if (!(depth > 0)) fail(ErrorCode::kNonPositive, "depth = " + std::to_string(depth));
  return rig.fx * rig.baseline / depth;
}

double disparity_to_depth(const CameraRig& rig, double disparity) {
  if (!(disparity > 0)) fail(ErrorCode::kNonPositive, "disparity = " + std::to_string(disparity));
  return rig.fx * rig.baseline / disparity;
}

Point3 unproject(const CameraRig& rig, const PixelCoord& px, double depth) {
  if (!(depth > 0)) fail(ErrorCode::kNonPositiveDepth, "depth = " + std::to_string(depth));
  return {(px.u - rig.cx) * depth / rig.fx, (px.v - rig.cy) * depth / rig.fy, depth};
}

namespace {

bool inside(const CameraRig& rig, const PixelCoord& px) {
  return px.u >= 0.0 && px.u <= rig.image_w - 1 && px.v >= 0.0 && px.v <= rig.image_h - 1;
}

}  // namespace

bool in_fov(const CameraRig& rig, const Point3& p, bool require_both_cameras) {
  if (!(p.z > 0)) return false;
  if (!inside(rig, project_to_image(rig, p))) return false;
  return !require_both_cameras || inside(rig, project_to_right(rig, p));
}

}  // namespace plume
