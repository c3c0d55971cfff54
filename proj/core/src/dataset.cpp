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

#include "plume/dataset.hpp"

#include <algorithm>

#include "plume/binary_io.hpp"
#include "plume/error.hpp"
#include "plume/image_io.hpp"
#include "plume/kitti.hpp"

namespace plume {

namespace fs = std::filesystem;

void StereoSample::validate() const {
  require(left.defined() && right.defined() && left.rank() == 3 && left.dim(0) == 3 && left.shape() == right.shape(),
          ErrorCode::kShapeMismatch, "sample " + id + ": stereo images must share a [3, H, W] shape");
  require(rig.image_w == static_cast<int>(left.dim(2)) && rig.image_h == static_cast<int>(left.dim(1)),
          ErrorCode::kRigMismatch, "sample " + id + ": rig image size does not match the images");
  rig.validate();
}

void save_kitti_sample(const fs::path& root, const StereoSample& sample, ImageFormat format) {
  sample.validate();
  for (const char* dir : {"image_2", "image_3", "calib", "label_2", "velodyne"}) {
    std::error_code ec;
    fs::create_directories(root / dir, ec);
    if (ec) fail(ErrorCode::kIoError, "cannot create " + (root / dir).string() + ": " + ec.message());
  }
  const std::string ext = format == ImageFormat::kPng ? ".png" : ".rawf";
  write_image((root / "image_2" / (sample.id + ext)).string(), sample.left);
  write_image((root / "image_3" / (sample.id + ext)).string(), sample.right);
  write_file_text((root / "calib" / (sample.id + ".txt")).string(), format_kitti_calib(calib_from_rig(sample.rig)));
  write_file_text((root / "label_2" / (sample.id + ".txt")).string(), format_kitti_labels(sample.gt_boxes));
  write_file_bytes((root / "velodyne" / (sample.id + ".bin")).string(), write_point_cloud(sample.cloud));
}

namespace {

fs::path find_image(const fs::path& dir, const std::string& id) {
  for (const char* ext : {".rawf", ".png"}) {
    const fs::path p = dir / (id + ext);
    if (fs::exists(p)) return p;
  }
  fail(ErrorCode::kIoError, "no image for sample " + id + " in " + dir.string());
}

}  // namespace

StereoSample load_kitti_sample(const fs::path& root, const std::string& id) {
  StereoSample s;
  s.id = id;
  s.left = read_image(find_image(root / "image_2", id).string());
  s.right = read_image(find_image(root / "image_3", id).string());
  const KittiCalib calib = parse_kitti_calib_full(read_file_text((root / "calib" / (id + ".txt")).string()));
  s.rig = rig_from_calib(calib, static_cast<int>(s.left.dim(2)), static_cast<int>(s.left.dim(1)));
  const fs::path labels = root / "label_2" / (id + ".txt");
  if (fs::exists(labels)) s.gt_boxes = parse_kitti_labels(read_file_text(labels.string()));
  const fs::path velo = root / "velodyne" / (id + ".bin");
  if (fs::exists(velo)) s.cloud = read_point_cloud(read_file_bytes(velo.string()), calib);
  s.validate();
  return s;
}

std::vector<std::string> list_sample_ids(const fs::path& root) {
  std::vector<std::string> ids;
  const fs::path calib = root / "calib";
  if (!fs::is_directory(calib)) fail(ErrorCode::kIoError, "missing directory " + calib.string());
  for (const auto& entry : fs::directory_iterator(calib)) {
    if (entry.path().extension() == ".txt") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<StereoSample> load_kitti_dataset(const fs::path& root) {
  std::vector<StereoSample> out;
  for (const std::string& id : list_sample_ids(root)) out.push_back(load_kitti_sample(root, id));
  return out;
}

}  // namespace plume
