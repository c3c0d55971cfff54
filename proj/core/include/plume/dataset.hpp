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

#include <filesystem>
#include <string>
#include <vector>

#include "plume/evaluation.hpp"
#include "plume/geometry.hpp"
#include "plume/tensor.hpp"

namespace plume {

struct StereoSample {
  std::string id;
  Tensor left;   // [3, H, W] in [0, 1]
  Tensor right;  // same shape as left
  CameraRig rig;
  std::vector<Point3> cloud;  // camera frame
  std::vector<GroundTruthBox> gt_boxes;

  // Throws kShapeMismatch / kRigMismatch when images and rig disagree.
  void validate() const;
};

enum class ImageFormat { kPng, kRawFloat };

// KITTI object layout under `root`: image_2/, image_3/, calib/, label_2/,
// velodyne/. Point clouds are stored in the camera frame with identity
// extrinsics.
void save_kitti_sample(const std::filesystem::path& root, const StereoSample& sample,
                       ImageFormat format = ImageFormat::kRawFloat);
// Reads image_2/<id>.rawf or .png (and image_3), calib/<id>.txt, and when
// present label_2/<id>.txt and velodyne/<id>.bin.
StereoSample load_kitti_sample(const std::filesystem::path& root, const std::string& id);
// Sample ids from calib/*.txt, sorted.
std::vector<std::string> list_sample_ids(const std::filesystem::path& root);
std::vector<StereoSample> load_kitti_dataset(const std::filesystem::path& root);

}  // namespace plume
