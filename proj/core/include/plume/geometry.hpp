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

// Rectified stereo pinhole model. Camera frame: x right, y down, z forward.

namespace plume {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

// Intrinsics of the (rectified) left camera plus the horizontal baseline to
// the right camera. Both cameras share fx, fy, cx, cy and image size.
struct CameraRig {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double baseline = 1.0;  // meters
  int image_w = 1;
  int image_h = 1;

  // Throws kInvalidSpec unless fx, fy, baseline > 0 and image dims >= 1.
  void validate() const;

  // Same rig observed at 1/factor of the pixel resolution.
  CameraRig downscaled(int factor) const;
};

PixelCoord project_to_image(const CameraRig& rig, const Point3& p);
PixelCoord project_to_right(const CameraRig& rig, const Point3& p);

double depth_to_disparity(const CameraRig& rig, double depth);
double disparity_to_depth(const CameraRig& rig, double disparity);

// Left-camera pixel plus depth back to the camera frame (pseudo-LiDAR unprojection).
Point3 unproject(const CameraRig& rig, const PixelCoord& px, double depth);

bool in_fov(const CameraRig& rig, const Point3& p, bool require_both_cameras = true);

}  // namespace plume
