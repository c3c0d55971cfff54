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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plume/evaluation.hpp"
#include "plume/geometry.hpp"

namespace plume {

// Calibration file of the KITTI object benchmark ("KEY: v0 v1 ..." lines).
struct KittiCalib {
  std::array<double, 12> p2{};  // 3x4 row-major, left color camera
  std::array<double, 12> p3{};  // right color camera
  std::optional<std::array<double, 9>> r0_rect;
  std::optional<std::array<double, 12>> tr_velo_to_cam;
};

// Throws kMissingKey without P2/P3 and kMalformedMatrix on a bad value count.
KittiCalib parse_kitti_calib_full(const std::string& text);
// Rig from P2/P3: fx = P2[0,0], fy = P2[1,1], cx = P2[0,2], cy = P2[1,2],
// baseline = (P2[0,3] - P3[0,3]) / fx. KITTI calib files carry no image size.
CameraRig rig_from_calib(const KittiCalib& calib, int image_w, int image_h);
CameraRig parse_kitti_calib(const std::string& text, int image_w = 1242, int image_h = 375);
// Writes P0..P3, R0_rect and Tr_velo_to_cam (identity when absent).
std::string format_kitti_calib(const KittiCalib& calib);
// Calibration for a rig whose left camera is the reference frame.
KittiCalib calib_from_rig(const CameraRig& rig);

// One object per line: type truncated occluded alpha x1 y1 x2 y2 h w l x y z
// rotation_y. The BEV box takes (u, v) = (x, z), (w, h) = (width, length)
// and theta = -rotation_y - pi/2.
std::vector<GroundTruthBox> parse_kitti_labels(const std::string& text);
std::string format_kitti_labels(std::span<const GroundTruthBox> boxes);
double theta_from_rotation_y(double rotation_y);
double rotation_y_from_theta(double theta);

// Velodyne scans: packed little-endian float32 x, y, z, reflectance. With a
// calibration the points are mapped to the rectified camera frame via
// R0_rect * Tr_velo_to_cam.
std::vector<Point3> read_point_cloud(std::span<const std::uint8_t> bytes,
                                     const std::optional<KittiCalib>& calib = std::nullopt);
std::vector<std::uint8_t> write_point_cloud(std::span<const Point3> points);

}  // namespace plume
