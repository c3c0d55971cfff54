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

#include "plume/kitti.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>

#include "plume/binary_io.hpp"
#include "plume/error.hpp"

namespace plume {

namespace {

template <std::size_t N>
std::array<double, N> matrix_from(const std::map<std::string, std::vector<double>>& entries, const std::string& key) {
  auto it = entries.find(key);
  if (it == entries.end()) fail(ErrorCode::kMissingKey, "calibration lacks " + key);
  require(it->second.size() == N, ErrorCode::kMalformedMatrix,
          key + " has " + std::to_string(it->second.size()) + " values, expected " + std::to_string(N));
  std::array<double, N> out;
  std::copy(it->second.begin(), it->second.end(), out.begin());
  return out;
}

template <std::size_t N>
std::string matrix_line(const std::string& key, const std::array<double, N>& m) {
  std::string out = key + ":";
  char buf[40];
  for (double v : m) {
    std::snprintf(buf, sizeof(buf), " %.17g", v);
    out += buf;
  }
  return out + "\n";
}

constexpr std::array<double, 12> kIdentity34{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
constexpr std::array<double, 9> kIdentity33{1, 0, 0, 0, 1, 0, 0, 0, 1};

}  // namespace

KittiCalib parse_kitti_calib_full(const std::string& text) {
  std::map<std::string, std::vector<double>> entries;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key = line.substr(0, colon);
    key.erase(0, key.find_first_not_of(" \t"));
    std::istringstream values(line.substr(colon + 1));
    std::vector<double> v;
    std::string token;
    while (values >> token) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(token, &used));
        require(used == token.size(), ErrorCode::kMalformedMatrix, key + ": bad number '" + token + "'");
      } catch (const std::logic_error&) {
        fail(ErrorCode::kMalformedMatrix, key + ": bad number '" + token + "'");
      }
    }
    entries[key] = std::move(v);
  }
  KittiCalib c;
  c.p2 = matrix_from<12>(entries, "P2");
  c.p3 = matrix_from<12>(entries, "P3");
  if (entries.count("R0_rect")) c.r0_rect = matrix_from<9>(entries, "R0_rect");
  if (entries.count("Tr_velo_to_cam")) c.tr_velo_to_cam = matrix_from<12>(entries, "Tr_velo_to_cam");
  return c;
}

CameraRig rig_from_calib(const KittiCalib& calib, int image_w, int image_h) {
  CameraRig rig;
  rig.fx = calib.p2[0];
  rig.fy = calib.p2[5];
  rig.cx = calib.p2[2];
  rig.cy = calib.p2[6];
  require(rig.fx > 0, ErrorCode::kMalformedMatrix, "P2 focal length must be positive");
  rig.baseline = (calib.p2[3] - calib.p3[3]) / rig.fx;
  rig.image_w = image_w;
  rig.image_h = image_h;
  rig.validate();
  return rig;
}

CameraRig parse_kitti_calib(const std::string& text, int image_w, int image_h) {
  return rig_from_calib(parse_kitti_calib_full(text), image_w, image_h);
}

KittiCalib calib_from_rig(const CameraRig& rig) {
  KittiCalib c;
  c.p2 = {rig.fx, 0, rig.cx, 0, 0, rig.fy, rig.cy, 0, 0, 0, 1, 0};
  c.p3 = c.p2;
  c.p3[3] = -rig.fx * rig.baseline;
  c.r0_rect = kIdentity33;
  c.tr_velo_to_cam = kIdentity34;
  return c;
}

std::string format_kitti_calib(const KittiCalib& calib) {
  std::string out;
  out += matrix_line("P0", calib.p2);
  out += matrix_line("P1", calib.p3);
  out += matrix_line("P2", calib.p2);
  out += matrix_line("P3", calib.p3);
  out += matrix_line("R0_rect", calib.r0_rect.value_or(kIdentity33));
  out += matrix_line("Tr_velo_to_cam", calib.tr_velo_to_cam.value_or(kIdentity34));
  out += matrix_line("Tr_imu_to_velo", kIdentity34);
  return out;
}

double theta_from_rotation_y(double rotation_y) { return normalize_angle(-rotation_y - std::numbers::pi / 2); }

double rotation_y_from_theta(double theta) { return normalize_angle(-theta - std::numbers::pi / 2); }

std::vector<GroundTruthBox> parse_kitti_labels(const std::string& text) {
  std::vector<GroundTruthBox> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> f;
    for (std::string t; fields >> t;) f.push_back(t);
    if (f.empty()) continue;
    // A 16th field (score) appears in result files; labels have exactly 15.
    require(f.size() == 15, ErrorCode::kMalformedLine,
            "label line " + std::to_string(line_no) + " has " + std::to_string(f.size()) + " fields, expected 15");
    std::array<double, 14> v{};
    for (std::size_t i = 1; i < 15; ++i) {
      try {
        std::size_t used = 0;
        v[i - 1] = std::stod(f[i], &used);
        require(used == f[i].size(), ErrorCode::kMalformedLine, "bad number");
      } catch (const std::logic_error&) {
        fail(ErrorCode::kMalformedLine, "label line " + std::to_string(line_no) + ": bad number '" + f[i] + "'");
      }
    }
    GroundTruthBox g;
    g.type = f[0];
    g.truncation = v[0];
    g.occlusion = static_cast<int>(v[1]);
    g.alpha = v[2];
    g.bbox = {v[3], v[4], v[5], v[6]};
    g.image_bbox_height = v[6] - v[4];
    g.height_3d = v[7];
    g.box.w = v[8];
    g.box.h = v[9];
    g.box.u = v[10];
    g.y = v[11];
    g.box.v = v[12];
    g.box.theta = theta_from_rotation_y(v[13]);
    g.box.score = 1.0;
    g.difficulty = assign_difficulty(g);
    out.push_back(g);
  }
  return out;
}

std::string format_kitti_labels(std::span<const GroundTruthBox> boxes) {
  std::string out;
  char buf[512];
  for (const GroundTruthBox& g : boxes) {
    std::snprintf(buf, sizeof(buf),
                  "%s %.17g %d %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                  g.type.c_str(), g.truncation, g.occlusion, g.alpha, g.bbox[0], g.bbox[1], g.bbox[2], g.bbox[3],
                  g.height_3d, g.box.w, g.box.h, g.box.u, g.y, g.box.v, rotation_y_from_theta(g.box.theta));
    out += buf;
  }
  return out;
}

std::vector<Point3> read_point_cloud(std::span<const std::uint8_t> bytes, const std::optional<KittiCalib>& calib) {
  require(bytes.size() % 16 == 0, ErrorCode::kTruncatedFile,
          "point cloud size " + std::to_string(bytes.size()) + " is not a multiple of 16 bytes");
  ByteReader r(bytes);
  std::vector<Point3> out(bytes.size() / 16);
  const std::array<double, 12> tr = calib && calib->tr_velo_to_cam ? *calib->tr_velo_to_cam : kIdentity34;
  const std::array<double, 9> r0 = calib && calib->r0_rect ? *calib->r0_rect : kIdentity33;
  for (Point3& p : out) {
    const double x = r.f32();
    const double y = r.f32();
    const double z = r.f32();
    r.f32();  // reflectance
    if (!calib) {
      p = {x, y, z};
      continue;
    }
    const double cx = tr[0] * x + tr[1] * y + tr[2] * z + tr[3];
    const double cy = tr[4] * x + tr[5] * y + tr[6] * z + tr[7];
    const double cz = tr[8] * x + tr[9] * y + tr[10] * z + tr[11];
    p = {r0[0] * cx + r0[1] * cy + r0[2] * cz, r0[3] * cx + r0[4] * cy + r0[5] * cz,
         r0[6] * cx + r0[7] * cy + r0[8] * cz};
  }
  return out;
}

std::vector<std::uint8_t> write_point_cloud(std::span<const Point3> points) {
  ByteWriter w;
  for (const Point3& p : points) {
    w.f32(static_cast<float>(p.x));
    w.f32(static_cast<float>(p.y));
    w.f32(static_cast<float>(p.z));
    w.f32(0.0f);
  }
  return w.take();
}

}  // namespace plume
