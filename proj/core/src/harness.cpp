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

#include "plume/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "plume/error.hpp"
#include "plume/ops.hpp"
#include "plume/synthetic.hpp"

namespace plume {

namespace {

bool selected(const std::string& name, std::span<const std::string> prefixes) {
  return std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& p) { return name.rfind(p, 0) == 0; });
}

}  // namespace

std::string to_string(Stage s) {
  return s == Stage::kBackboneOccupancy ? "backbone_occupancy" : "detection_head";
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::kAdam ? "adam" : "sgd_momentum"; }

void TrainSchedule::validate() const {
  require(epochs >= 1, ErrorCode::kInvalidConfig, "schedule needs at least one epoch");
  require(initial_lr > 0 && std::isfinite(initial_lr), ErrorCode::kInvalidConfig, "learning rate must be positive");
  require(batch_size >= 1, ErrorCode::kInvalidConfig, "batch size must be >= 1");
  require(momentum >= 0 && momentum < 1 && beta2 >= 0 && beta2 < 1, ErrorCode::kInvalidConfig,
          "momentum terms must lie in [0, 1)");
  require(decay_factor > 0, ErrorCode::kInvalidConfig, "decay factor must be positive");
  for (std::size_t i = 0; i < decay_epochs.size(); ++i) {
    require(decay_epochs[i] < epochs, ErrorCode::kInvalidConfig, "decay epoch beyond the schedule");
    require(i == 0 || decay_epochs[i] > decay_epochs[i - 1], ErrorCode::kInvalidConfig,
            "decay epochs must be strictly increasing");
  }
}

TrainSchedule TrainSchedule::backbone_default() { return {}; }

TrainSchedule TrainSchedule::detection_default() {
  TrainSchedule s;
  s.stage = Stage::kDetectionHead;
  s.initial_lr = 0.01;
  s.decay_epochs = {30, 45};
  return s;
}

TrainSchedule TrainSchedule::toy_backbone() {
  TrainSchedule s;
  s.optimizer = OptimizerKind::kAdam;
  s.epochs = 200;
  s.initial_lr = 0.003;
  s.decay_epochs = {};
  s.batch_size = 4;
  return s;
}

TrainSchedule TrainSchedule::toy_detection() {
  TrainSchedule s;
  s.stage = Stage::kDetectionHead;
  s.optimizer = OptimizerKind::kAdam;
  s.epochs = 300;
  s.initial_lr = 0.001;
  s.decay_epochs = {};
  return s;
}

NetworkConfig toy_network_config(double scale) {
  NetworkConfig c;
  c.grid = SyntheticSceneSpec::toy(0).grid;
  c.scale = scale;
  c.dropout = 0.0;
  return c;
}

double lr_at(const TrainSchedule& schedule, std::size_t epoch) {
  schedule.validate();
  require(epoch < schedule.epochs, ErrorCode::kOutOfRange,
          "epoch " + std::to_string(epoch) + " outside a " + std::to_string(schedule.epochs) + "-epoch schedule");
  double lr = schedule.initial_lr;
  for (std::size_t d : schedule.decay_epochs) {
    if (epoch >= d) lr *= schedule.decay_factor;
  }
  return lr;
}

void SgdMomentum::step(ParameterStore& store, std::span<const std::string> prefixes, double lr) {
  for (auto& [name, param] : store.entries()) {
    if (!selected(name, prefixes) || !param.has_grad()) continue;
    Tensor p = param;
    const auto g = p.grad();
    auto w = p.mutable_data();
    auto& v = velocity_[name];
    if (v.empty()) v.assign(w.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = momentum_ * v[i] + g[i] + weight_decay_ * w[i];
      w[i] -= lr * v[i];
    }
    if (p.dtype() == Dtype::kFloat32) p.set_dtype(Dtype::kFloat32);
  }
}

void Adam::step(ParameterStore& store, std::span<const std::string> prefixes, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& [name, param] : store.entries()) {
    if (!selected(name, prefixes) || !param.has_grad()) continue;
    Tensor p = param;
    const auto g = p.grad();
    auto w = p.mutable_data();
    auto& [m, v] = moments_[name];
    if (m.empty()) {
      m.assign(w.size(), 0.0);
      v.assign(w.size(), 0.0);
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] + weight_decay_ * w[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
    if (p.dtype() == Dtype::kFloat32) p.set_dtype(Dtype::kFloat32);
  }
}

std::unique_ptr<Optimizer> make_optimizer(const TrainSchedule& schedule) {
  if (schedule.optimizer == OptimizerKind::kAdam) {
    return std::make_unique<Adam>(schedule.momentum, schedule.beta2, schedule.weight_decay);
  }
  return std::make_unique<SgdMomentum>(schedule.momentum, schedule.weight_decay);
}

std::vector<std::string> stage_prefixes(Stage s) {
  if (s == Stage::kDetectionHead) return {kDetectionPrefix};
  return {kStereoPrefix, kStereoRightPrefix, kVolumePrefix, kOccupancyPrefix};
}

TrainingSample prepare_sample(const StereoSample& sample, const NetworkConfig& config) {
  sample.validate();
  TrainingSample t;
  t.sample = sample;
  t.labels = occupancy_from_points(config.grid, sample.cloud, sample.rig, config.require_both_cameras);
  std::vector<BevBox> boxes;
  for (const GroundTruthBox& g : sample.gt_boxes) {
    if (g.type != "DontCare") boxes.push_back(g.box);
  }
  t.targets = encode_detection_targets(boxes, config.grid, 4);
  return t;
}

std::vector<EpochLoss> epoch_curve(std::span<const LossRecord> records) {
  std::vector<EpochLoss> out;
  std::size_t count = 0;
  for (const LossRecord& r : records) {
    if (out.empty() || out.back().epoch != r.epoch) {
      if (!out.empty()) out.back().mean_loss /= static_cast<double>(count);
      out.push_back({r.epoch, 0.0});
      count = 0;
    }
    out.back().mean_loss += r.loss;
    ++count;
  }
  if (!out.empty()) out.back().mean_loss /= static_cast<double>(count);
  return out;
}

namespace {

void check_finite(double loss, std::size_t step) {
  if (!std::isfinite(loss)) {
    fail(ErrorCode::kDivergedLoss, "loss is " + std::to_string(loss) + " at step " + std::to_string(step));
  }
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed * 1000003ULL + epoch);
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's distribution implementation.
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  return order;
}

}  // namespace

std::vector<LossRecord> train_stage(PlumeModel& model, const TrainSchedule& schedule,
                                    std::span<const TrainingSample> data, const TrainOptions& options) {
  schedule.validate();
  require(!data.empty(), ErrorCode::kEmptyDataset, "training set is empty");
  ParameterStore& params = model.parameters();
  const std::vector<std::string> prefixes = stage_prefixes(schedule.stage);
  const std::unique_ptr<Optimizer> optimizer = make_optimizer(schedule);
  std::mt19937_64 dropout_rng(schedule.seed ^ 0x5eedULL);

  // Stage 2 trains on fixed backbone features.
  std::vector<Tensor> cached;
  if (schedule.stage == Stage::kDetectionHead) {
    NoGradGuard no_grad;
    ForwardContext ctx;
    for (const TrainingSample& s : data) {
      const BackboneOutputs b = model.backbone(s.sample.left, s.sample.right, s.sample.rig, ctx);
      cached.push_back(model.detection_input(b).detach());
    }
  }

  std::vector<LossRecord> records;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < schedule.epochs; ++epoch) {
    const double lr = lr_at(schedule, epoch);
    const std::vector<std::size_t> order = epoch_order(data.size(), schedule.seed, epoch);
    for (std::size_t start = 0; start < order.size(); start += schedule.batch_size) {
      const std::size_t end = std::min(order.size(), start + schedule.batch_size);
      const double weight = 1.0 / static_cast<double>(end - start);
      ++step;
      params.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const TrainingSample& s = data[order[k]];
        ForwardContext ctx{true, &dropout_rng, nullptr};
        Tensor loss;
        if (schedule.stage == Stage::kBackboneOccupancy) {
          const BackboneOutputs b = model.backbone(s.sample.left, s.sample.right, s.sample.rig, ctx);
          loss = occupancy_bce_logits(b.occupancy_logits, s.labels);
        } else {
          const DenseDetections d = model.detection_head(cached[order[k]], ctx);
          loss = detection_loss(d, s.targets).total;
        }
        check_finite(loss.item(), step);
        batch_loss += weight * loss.item();
        backward(ops::scale(loss, weight));
      }
      optimizer->step(params, prefixes, lr);
      LossRecord rec{schedule.stage, step, epoch, lr, batch_loss};
      records.push_back(rec);
      if (options.on_step) options.on_step(rec);
    }
  }
  return records;
}

TrainResult train(PlumeModel& model, const TrainSchedule& stage1, const TrainSchedule& stage2,
                  std::span<const TrainingSample> data, const TrainOptions& options) {
  require(stage1.stage == Stage::kBackboneOccupancy && stage2.stage == Stage::kDetectionHead,
          ErrorCode::kInvalidConfig, "train() expects a backbone schedule followed by a detection schedule");
  TrainResult r;
  r.stage1 = train_stage(model, stage1, data, options);
  r.stage2 = train_stage(model, stage2, data, options);
  return r;
}

std::vector<CheckpointRecord> model_checkpoint(const PlumeModel& model, std::span<const TrainSchedule> schedules) {
  std::vector<CheckpointRecord> records = records_from_store(model.parameters());
  auto meta = [&](const std::string& name, std::vector<float> values) {
    const std::size_t n = values.size();
    records.push_back({name, {n}, std::move(values)});
  };
  for (std::size_t i = 0; i < schedules.size(); ++i) {
    const TrainSchedule& s = schedules[i];
    const std::string p = "meta." + to_string(s.stage) + ".";
    // Optimizer id: 1 = SGD with heavy-ball momentum, 2 = Adam.
    meta(p + "optimizer", {s.optimizer == OptimizerKind::kAdam ? 2.0f : 1.0f, static_cast<float>(s.momentum),
                           static_cast<float>(s.beta2), static_cast<float>(s.weight_decay)});
    std::vector<float> sched{static_cast<float>(s.epochs), static_cast<float>(s.initial_lr),
                             static_cast<float>(s.decay_factor), static_cast<float>(s.batch_size)};
    for (std::size_t d : s.decay_epochs) sched.push_back(static_cast<float>(d));
    meta(p + "schedule", std::move(sched));
  }
  return records;
}

void load_model_checkpoint(PlumeModel& model, const std::string& path) {
  load_into_store(model.parameters(), load_checkpoint(path));
}

InferResult infer(const PlumeModel& model, const StereoSample& sample, const InferOptions& options) {
  sample.validate();
  NoGradGuard no_grad;
  ForwardContext ctx;
  const BackboneOutputs b = model.backbone(sample.left, sample.right, sample.rig, ctx);
  InferResult r;
  const NetworkConfig& config = model.config();
  r.occupancy.spec = config.grid;
  r.occupancy.dims = grid_dims(config.grid);
  r.occupancy.values.assign(b.occupancy.data().begin(), b.occupancy.data().end());
  r.occupancy.fov_mask = fov_mask(config.grid, sample.rig, config.require_both_cameras);
  r.maps = model.detection_head(model.detection_input(b), ctx);
  r.candidates = decode_boxes(r.maps.class_logits, r.maps.regression, config.grid, 4, options.score_threshold);
  r.detections = nms(r.candidates, options.nms_iou);
  return r;
}

std::string format_loss_curve(std::span<const LossRecord> records) {
  std::string out;
  char buf[160];
  for (const LossRecord& r : records) {
    std::snprintf(buf, sizeof(buf), "%s %zu %zu %.9g %.17g\n", to_string(r.stage).c_str(), r.step, r.epoch, r.lr,
                  r.loss);
    out += buf;
  }
  return out;
}

}  // namespace plume
