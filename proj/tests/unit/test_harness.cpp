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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include <unistd.h>

#include "plume/checkpoint.hpp"
#include "plume/error.hpp"
#include "plume/harness.hpp"
#include "plume/synthetic.hpp"

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

std::vector<TrainingSample> toy_data(std::size_t count, const NetworkConfig& config) {
  std::vector<TrainingSample> out;
  for (std::size_t i = 0; i < count; ++i) {
    StereoSample s = synth_scene(SyntheticSceneSpec::toy(100 + i)).sample;
    out.push_back(prepare_sample(s, config));
  }
  return out;
}

TrainSchedule short_schedule(Stage stage, std::size_t epochs) {
  TrainSchedule s = stage == Stage::kBackboneOccupancy ? TrainSchedule::toy_backbone() : TrainSchedule::toy_detection();
  s.epochs = epochs;
  s.batch_size = 2;
  return s;
}

TEST(Schedule, LearningRateExamples) {
  const TrainSchedule s1 = TrainSchedule::backbone_default();
  EXPECT_EQ(lr_at(s1, 10), 0.001);
  EXPECT_NEAR(lr_at(s1, 36), 0.0001, 1e-18);
  EXPECT_NEAR(lr_at(s1, 46), 0.00001, 1e-18);
  EXPECT_NEAR(lr_at(s1, 35), 0.0001, 1e-18);
  EXPECT_EQ(lr_at(TrainSchedule::detection_default(), 0), 0.01);
  EXPECT_EQ(code_of([&] { lr_at(s1, 50); }), ErrorCode::kOutOfRange);
  EXPECT_EQ(s1.optimizer, OptimizerKind::kSgdMomentum);
  EXPECT_EQ(s1.momentum, 0.9);
}

TEST(Schedule, Validation) {
  TrainSchedule s;
  s.decay_epochs = {45, 35};
  EXPECT_EQ(code_of([&] { s.validate(); }), ErrorCode::kInvalidConfig);
  s.decay_epochs = {35, 50};
  EXPECT_EQ(code_of([&] { s.validate(); }), ErrorCode::kInvalidConfig);
  s = TrainSchedule{};
  s.initial_lr = 0;
  EXPECT_EQ(code_of([&] { s.validate(); }), ErrorCode::kInvalidConfig);
  s = TrainSchedule{};
  s.batch_size = 0;
  EXPECT_EQ(code_of([&] { s.validate(); }), ErrorCode::kInvalidConfig);
  TrainSchedule::toy_backbone().validate();
  TrainSchedule::toy_detection().validate();
}

TEST(Optimizer, ZeroLearningRateChangesNothing) {
  PlumeModel model(toy_network_config(), 3);
  for (const auto& [name, t] : model.parameters().entries()) {
    Tensor p = t;
    p.set_requires_grad();
    auto g = p.impl()->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.01 * static_cast<double>(i % 7) - 0.02;
  }
  const std::uint64_t before = model.parameters().checksum();
  const std::vector<std::string> all{""};
  SgdMomentum sgd;
  sgd.step(model.parameters(), all, 0.0);
  Adam adam;
  adam.step(model.parameters(), all, 0.0);
  EXPECT_EQ(model.parameters().checksum(), before);
  sgd.step(model.parameters(), all, 0.1);
  EXPECT_NE(model.parameters().checksum(), before);
}

TEST(Optimizer, OnlySelectedPrefixesMove) {
  PlumeModel model(toy_network_config(), 3);
  for (const auto& [name, t] : model.parameters().entries()) {
    Tensor p = t;
    p.set_requires_grad();
    for (double& g : p.impl()->grad_buffer()) g = 1.0;
  }
  const std::uint64_t backbone = model.parameters().checksum(kVolumePrefix);
  const std::uint64_t head = model.parameters().checksum(kDetectionPrefix);
  const auto prefixes = stage_prefixes(Stage::kDetectionHead);
  SgdMomentum sgd;
  sgd.step(model.parameters(), prefixes, 0.1);
  EXPECT_EQ(model.parameters().checksum(kVolumePrefix), backbone);
  EXPECT_NE(model.parameters().checksum(kDetectionPrefix), head);
}

TEST(Train, EmptyDatasetRejected) {
  PlumeModel model(toy_network_config(), 1);
  EXPECT_EQ(code_of([&] { train_stage(model, short_schedule(Stage::kBackboneOccupancy, 1), {}); }),
            ErrorCode::kEmptyDataset);
}

TEST(Train, SameSeedSameLossCurve) {
  const NetworkConfig config = toy_network_config();
  const auto data = toy_data(2, config);
  auto run = [&] {
    PlumeModel model(config, 5);
    const auto r = train(model, short_schedule(Stage::kBackboneOccupancy, 2),
                         short_schedule(Stage::kDetectionHead, 1), data);
    return format_loss_curve(r.stage1) + format_loss_curve(r.stage2) +
           std::to_string(model.parameters().checksum());
  };
  const std::string a = run();
  EXPECT_EQ(a, run());
}

TEST(Train, StageTwoFreezesBackbone) {
  const NetworkConfig config = toy_network_config();
  const auto data = toy_data(2, config);
  PlumeModel model(config, 6);
  train_stage(model, short_schedule(Stage::kBackboneOccupancy, 1), data);
  std::uint64_t frozen = 0;
  for (const char* p : {kStereoPrefix, kVolumePrefix, kOccupancyPrefix}) {
    frozen ^= model.parameters().checksum(p) + 0x9e3779b97f4a7c15ULL;
  }
  const auto bytes = encode_checkpoint(records_from_store(model.parameters(), kVolumePrefix));
  const std::uint64_t head = model.parameters().checksum(kDetectionPrefix);
  const auto records = train_stage(model, short_schedule(Stage::kDetectionHead, 2), data);
  EXPECT_EQ(records.size(), 2u);
  std::uint64_t after = 0;
  for (const char* p : {kStereoPrefix, kVolumePrefix, kOccupancyPrefix}) {
    after ^= model.parameters().checksum(p) + 0x9e3779b97f4a7c15ULL;
  }
  EXPECT_EQ(after, frozen);
  EXPECT_EQ(encode_checkpoint(records_from_store(model.parameters(), kVolumePrefix)), bytes);
  EXPECT_NE(model.parameters().checksum(kDetectionPrefix), head);
}

TEST(Train, NonFiniteLossNamesStep) {
  const NetworkConfig config = toy_network_config();
  auto data = toy_data(1, config);
  // A NaN pixel would be flattened by the first ReLU, so poison a label instead.
  for (std::size_t i = 0; i < data[0].labels.values.size(); ++i) {
    if (data[0].labels.fov_mask[i]) {
      data[0].labels.values[i] = std::numeric_limits<double>::quiet_NaN();
      break;
    }
  }
  PlumeModel model(config, 1);
  try {
    train_stage(model, short_schedule(Stage::kBackboneOccupancy, 1), data);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivergedLoss);
    EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos);
  }
}

TEST(Train, EpochCurveAveragesSteps) {
  std::vector<LossRecord> records(4);
  for (std::size_t i = 0; i < 4; ++i) {
    records[i].step = i + 1;
    records[i].epoch = i / 2;
    records[i].loss = static_cast<double>(i);
  }
  const auto curve = epoch_curve(records);
  ASSERT_EQ(curve.size(), 2u);
  EXPECT_EQ(curve[0].mean_loss, 0.5);
  EXPECT_EQ(curve[1].mean_loss, 2.5);
  const std::string text = format_loss_curve(records);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

TEST(Infer, OutputShapesAndDeterminism) {
  const NetworkConfig config = toy_network_config();
  PlumeModel model(config, 2);
  const StereoSample sample = synth_scene(SyntheticSceneSpec::toy(1)).sample;
  InferOptions options;
  options.score_threshold = 0.0;
  const InferResult a = infer(model, sample, options);
  const GridDims d = grid_dims(config.grid);
  EXPECT_EQ(a.occupancy.dims, d);
  EXPECT_EQ(a.maps.class_logits.shape(), (Shape{1, d.x / 4, d.z / 4}));
  EXPECT_EQ(a.candidates.size(), d.x / 4 * d.z / 4);
  EXPECT_LE(a.detections.size(), a.candidates.size());
  const InferResult b = infer(model, sample, options);
  EXPECT_EQ(a.occupancy.values, b.occupancy.values);
  EXPECT_EQ(format_detections(a.detections), format_detections(b.detections));
}

TEST(Checkpoint, ProvenanceAndReload) {
  const NetworkConfig config = toy_network_config();
  PlumeModel model(config, 4);
  const std::vector<TrainSchedule> schedules{TrainSchedule::backbone_default(), TrainSchedule::detection_default()};
  const auto records = model_checkpoint(model, schedules);
  const CheckpointRecord* opt = nullptr;
  for (const auto& r : records) {
    if (r.name == "meta.backbone_occupancy.optimizer") opt = &r;
  }
  ASSERT_NE(opt, nullptr);
  EXPECT_EQ(opt->values[0], 1.0f);
  EXPECT_EQ(opt->values[1], 0.9f);

  const std::string path = (std::filesystem::temp_directory_path() /
                            ("plume_unit_ckpt_" + std::to_string(::getpid()) + ".plmw")).string();
  save_checkpoint(path, records);
  PlumeModel other(config, 99);
  EXPECT_NE(other.parameters().checksum(), model.parameters().checksum());
  load_model_checkpoint(other, path);
  // Checkpoints store float32 values.
  PlumeModel rounded(config, 4);
  load_into_store(rounded.parameters(), decode_checkpoint(encode_checkpoint(records)));
  EXPECT_EQ(other.parameters().checksum(), rounded.parameters().checksum());

  NetworkConfig bigger = config;
  bigger.variant = Variant::kMiddle;
  PlumeModel mismatched(bigger, 4);
  EXPECT_EQ(code_of([&] { load_model_checkpoint(mismatched, path); }), ErrorCode::kCheckpointMismatch);
  std::filesystem::remove(path);
}

TEST(Checkpoint, TruncatedBytes) {
  PlumeModel model(toy_network_config(), 4);
  auto bytes = encode_checkpoint(records_from_store(model.parameters(), kOccupancyPrefix));
  EXPECT_EQ(decode_checkpoint(bytes).size(), model.parameters().with_prefix(kOccupancyPrefix).size());
  bytes.pop_back();
  EXPECT_EQ(code_of([&] { decode_checkpoint(bytes); }), ErrorCode::kTruncatedFile);
}

TEST(Prepare, SkipsDontCare) {
  const NetworkConfig config = toy_network_config();
  StereoSample s = synth_scene(SyntheticSceneSpec::toy(3)).sample;
  const std::size_t positives = prepare_sample(s, config).targets.positive_count;
  GroundTruthBox dc = s.gt_boxes.front();
  dc.type = "DontCare";
  dc.box.u += 0.3;
  s.gt_boxes.push_back(dc);
  EXPECT_EQ(prepare_sample(s, config).targets.positive_count, positives);
}

}  // namespace
}  // namespace plume
