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

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "plume/checkpoint.hpp"
#include "plume/dataset.hpp"
#include "plume/losses.hpp"
#include "plume/networks.hpp"
#include "plume/postproc.hpp"

namespace plume {

enum class Stage { kBackboneOccupancy, kDetectionHead };
std::string to_string(Stage s);

enum class OptimizerKind { kSgdMomentum, kAdam };
std::string to_string(OptimizerKind k);

struct TrainSchedule {
  Stage stage = Stage::kBackboneOccupancy;
  OptimizerKind optimizer = OptimizerKind::kSgdMomentum;
  std::size_t epochs = 50;
  double initial_lr = 0.001;
  std::vector<std::size_t> decay_epochs{35, 45};
  double decay_factor = 0.1;
  std::size_t batch_size = 2;
  std::uint64_t seed = 0;
  double momentum = 0.9;  // SGD momentum, or Adam's beta1
  double beta2 = 0.999;   // Adam only
  double weight_decay = 0.0;

  // kInvalidConfig unless decay epochs are strictly increasing and below
  // `epochs`, lr > 0, batch_size >= 1.
  void validate() const;

  // 50 epochs from lr 0.001, decayed 10x at epochs 35 and 45.
  static TrainSchedule backbone_default();
  // 50 epochs from lr 0.01, decayed 10x at epochs 30 and 45.
  static TrainSchedule detection_default();

  // Desk-scale presets for overfitting a handful of synthetic scenes: Adam
  // without decay. 200 epochs at lr 0.003 over full batches of 4 scenes.
  static TrainSchedule toy_backbone();
  // 300 epochs at lr 0.001, batch 2.
  static TrainSchedule toy_detection();
};

// Small model on the synthetic-scene grid: scale 0.125, no dropout.
NetworkConfig toy_network_config(double scale = 0.125);

// initial_lr * decay_factor ^ (number of decay epochs <= epoch).
double lr_at(const TrainSchedule& schedule, std::size_t epoch);

// Only parameters under the given prefixes that hold a gradient move.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(ParameterStore& store, std::span<const std::string> prefixes, double lr) = 0;
};

// Heavy-ball SGD: v = momentum * v + g + weight_decay * w; w -= lr * v.
class SgdMomentum : public Optimizer {
 public:
  explicit SgdMomentum(double momentum = 0.9, double weight_decay = 0.0)
      : momentum_(momentum), weight_decay_(weight_decay) {}
  void step(ParameterStore& store, std::span<const std::string> prefixes, double lr) override;

 private:
  double momentum_;
  double weight_decay_;
  std::map<std::string, std::vector<double>> velocity_;
};

// Adam with bias correction; weight decay is added to the gradient.
class Adam : public Optimizer {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double weight_decay = 0.0, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), weight_decay_(weight_decay), eps_(eps) {}
  void step(ParameterStore& store, std::span<const std::string> prefixes, double lr) override;

 private:
  double beta1_;
  double beta2_;
  double weight_decay_;
  double eps_;
  std::size_t t_ = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments_;
};

std::unique_ptr<Optimizer> make_optimizer(const TrainSchedule& schedule);

// Parameter prefixes optimised by each stage.
std::vector<std::string> stage_prefixes(Stage s);

struct TrainingSample {
  StereoSample sample;
  OccupancyGrid labels;
  DetectionTargets targets;
};

// Occupancy labels from the sample's point cloud and detection targets from
// its boxes (DontCare boxes are skipped).
TrainingSample prepare_sample(const StereoSample& sample, const NetworkConfig& config);

struct LossRecord {
  Stage stage = Stage::kBackboneOccupancy;
  std::size_t step = 0;  // 1-based within the stage
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct EpochLoss {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
};
std::vector<EpochLoss> epoch_curve(std::span<const LossRecord> records);

struct TrainOptions {
  std::function<void(const LossRecord&)> on_step;
};

// One stage. Stage 1 minimises the occupancy loss; stage 2 computes the
// frozen backbone's features once (evaluation mode) and minimises the
// detection loss on the detection head only. Throws kEmptyDataset, and
// kDivergedLoss naming the step when a loss is not finite.
std::vector<LossRecord> train_stage(PlumeModel& model, const TrainSchedule& schedule,
                                    std::span<const TrainingSample> data, const TrainOptions& options = {});

struct TrainResult {
  std::vector<LossRecord> stage1;
  std::vector<LossRecord> stage2;
};
TrainResult train(PlumeModel& model, const TrainSchedule& stage1, const TrainSchedule& stage2,
                  std::span<const TrainingSample> data, const TrainOptions& options = {});

// Parameters plus "meta.*" provenance records (optimizer and schedules).
std::vector<CheckpointRecord> model_checkpoint(const PlumeModel& model, std::span<const TrainSchedule> schedules);
void load_model_checkpoint(PlumeModel& model, const std::string& path);

struct InferOptions {
  double score_threshold = 0.5;
  double nms_iou = 0.3;
};

struct InferResult {
  OccupancyGrid occupancy;          // probabilities with the camera FOV mask
  DenseDetections maps;             // stride-4 head outputs
  std::vector<BevBox> candidates;   // decoded cells above threshold, before NMS
  std::vector<BevBox> detections;   // after NMS
};

InferResult infer(const PlumeModel& model, const StereoSample& sample, const InferOptions& options = {});

// Loss-curve text: one "stage step epoch lr loss" line per record.
std::string format_loss_curve(std::span<const LossRecord> records);

}  // namespace plume
