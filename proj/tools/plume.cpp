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


// plume: command-line front end for the library.
//
// Exit codes: 0 success, 1 validation failure, 2 I/O error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "plume/binary_io.hpp"
#include "plume/checkpoint.hpp"
#include "plume/config.hpp"
#include "plume/dataset.hpp"
#include "plume/error.hpp"
#include "plume/evaluation.hpp"
#include "plume/gradcheck.hpp"
#include "plume/harness.hpp"
#include "plume/kitti.hpp"
#include "plume/networks.hpp"
#include "plume/ops.hpp"
#include "plume/postproc.hpp"
#include "plume/synthetic.hpp"
#include "plume/voxel_grid.hpp"

namespace fs = std::filesystem;
using namespace plume;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError:
    case ErrorCode::kTruncatedFile:
    case ErrorCode::kMissingKey:
    case ErrorCode::kMalformedMatrix:
    case ErrorCode::kMalformedLine:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

// Options shared by every subcommand.
struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::string variant;
  double scale = 0.0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "network config JSON");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--out", c.out, "output path");
  cmd->add_option("--variant", c.variant, "model size")->check(CLI::IsMember({"small", "middle", "large"}));
  cmd->add_option("--scale", c.scale, "channel multiplier")->check(CLI::PositiveNumber);
}

// The config file when given, else `fallback`; --variant and --scale override.
NetworkConfig resolve_config(const Common& c, const NetworkConfig& fallback) {
  NetworkConfig config = c.config.empty() ? fallback : load_network_config(c.config);
  if (!c.variant.empty()) config.variant = parse_variant(c.variant);
  if (c.scale > 0) config.scale = c.scale;
  config.validate();
  return config;
}

std::uint64_t fnv1a(std::span<const double> values) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void emit(const std::string& text, const std::string& path) {
  std::cout << text;
  if (!path.empty()) write_file_text(path, text);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

PlumeModel make_model(const NetworkConfig& config, std::uint64_t seed, const std::string& checkpoint) {
  PlumeModel model(config, seed);
  if (!checkpoint.empty()) load_model_checkpoint(model, checkpoint);
  return model;
}

StereoSample pick_sample(const std::string& root, const std::string& id) {
  if (!id.empty()) return load_kitti_sample(root, id);
  const auto ids = list_sample_ids(root);
  require(!ids.empty(), ErrorCode::kEmptyDataset, "no samples under " + root);
  return load_kitti_sample(root, ids.front());
}

// ---- subcommands -----------------------------------------------------------------

int run_gradcheck(const Common& c, std::size_t shapes, const std::string& filter, bool skip_e2e) {
  gradcheck::SuiteOptions options;
  options.seed = c.seed == 0 ? 1 : c.seed;
  options.shapes_per_op = shapes;
  options.filter = filter;
  options.end_to_end = !skip_e2e;
  std::ostringstream report;
  bool ok = true;
  std::size_t cases = 0;
  gradcheck::run_suite(options, [&](const gradcheck::Result& r) {
    char line[256];
    std::snprintf(line, sizeof line, "%-4s %-48s entries %6zu  kinks %3zu  max_rel_err %.3e\n",
                  r.passed ? "ok" : "FAIL", r.name.c_str(), r.checked, r.kinks, r.max_rel_error);
    std::cout << line << std::flush;
    report << line;
    if (!r.passed) std::cout << "     worst: " << r.worst << "\n";
    ok = ok && r.passed;
    ++cases;
  });
  const std::string summary = std::to_string(cases) + " cases, " + (ok ? "all passed" : "FAILURES") + "\n";
  std::cout << summary;
  report << summary;
  if (!c.out.empty()) write_file_text(c.out, report.str());
  return ok ? 0 : kExitValidation;
}

int run_shapes(const Common& c, const std::string& positional, std::size_t image_h, std::size_t image_w) {
  Common cc = c;
  if (cc.config.empty()) cc.config = positional;
  const NetworkConfig config = resolve_config(cc, NetworkConfig{});
  std::ostringstream os;
  const auto plan = shape_plan(config, image_h, image_w);
  std::size_t width = 4;
  for (const auto& row : plan) width = std::max(width, row.name.size());
  for (const auto& row : plan) {
    os << row.name << std::string(width + 2 - row.name.size(), ' ') << row.symbolic
       << std::string(row.symbolic.size() < 28 ? 28 - row.symbolic.size() : 1, ' ') << shape_to_string(row.shape)
       << "\n";
  }
  int rc = 0;
  if (has_reference(config)) {
    const auto diffs = diff_against_reference(config, image_h, image_w);
    for (const auto& d : diffs) os << "DIFF " << d.row << ": expected " << d.expected << ", got " << d.actual << "\n";
    os << "reference (" << to_string(config.variant) << "): " << diffs.size() << " diffs\n";
    if (!diffs.empty()) rc = kExitValidation;
  } else {
    os << "no reference table for this configuration\n";
  }
  emit(os.str(), c.out);
  return rc;
}

int run_synth(const Common& c, std::size_t count, const std::string& format) {
  require(!c.out.empty(), ErrorCode::kInvalidConfig, "synth needs --out <directory>");
  std::ostringstream os;
  for (std::size_t i = 0; i < count; ++i) {
    SyntheticScene scene = synth_scene(SyntheticSceneSpec::toy(c.seed + i));
    char id[32];
    std::snprintf(id, sizeof id, "%06zu", i);
    scene.sample.id = id;
    save_kitti_sample(c.out, scene.sample, format == "png" ? ImageFormat::kPng : ImageFormat::kRawFloat);
    std::size_t occupied = 0;
    for (double v : scene.occupancy.values) occupied += v > 0.5;
    os << id << ": boxes " << scene.sample.gt_boxes.size() << ", points " << scene.sample.cloud.size()
       << ", occupied voxels " << occupied << ", left image " << hex64(fnv1a(scene.sample.left.data())) << "\n";
  }
  std::cout << os.str();
  return 0;
}

int run_occupancy(const Common& c, const std::string& cloud_path, const std::string& calib_path, int image_w,
                  int image_h) {
  require(!c.out.empty(), ErrorCode::kInvalidConfig, "occupancy needs --out <grid file>");
  const NetworkConfig config = resolve_config(c, toy_network_config());
  std::optional<KittiCalib> calib;
  std::optional<CameraRig> rig;
  if (!calib_path.empty()) {
    calib = parse_kitti_calib_full(read_file_text(calib_path));
    rig = rig_from_calib(*calib, image_w, image_h);
  }
  const auto cloud = read_point_cloud(read_file_bytes(cloud_path), calib);
  const OccupancyGrid grid = occupancy_from_points(config.grid, cloud, rig, config.require_both_cameras);
  write_occupancy_file(c.out, grid);
  std::size_t occupied = 0, visible = 0;
  for (std::size_t n = 0; n < grid.values.size(); ++n) {
    occupied += grid.values[n] > 0.5;
    visible += grid.fov_mask[n] != 0;
  }
  std::cout << "grid " << grid.dims.x << "x" << grid.dims.y << "x" << grid.dims.z << ", points " << cloud.size()
            << ", occupied " << occupied << ", visible " << visible << "\n";
  return 0;
}

int run_build_plume(const Common& c, const std::string& data, const std::string& id, const std::string& checkpoint) {
  const NetworkConfig config = resolve_config(c, toy_network_config());
  const PlumeModel model = make_model(config, c.seed, checkpoint);
  const StereoSample sample = pick_sample(data, id);
  NoGradGuard guard;
  ForwardContext ctx;
  const BackboneOutputs b = model.backbone(sample.left, sample.right, sample.rig, ctx);
  const Tensor& v = b.volume.values;
  if (!c.out.empty()) {
    CheckpointRecord rec{"plume", v.shape(), std::vector<float>(v.data().begin(), v.data().end())};
    save_checkpoint(c.out, {rec});
  }
  std::size_t nonzero = 0;
  for (double x : v.data()) nonzero += x != 0.0;
  std::cout << sample.id << ": plume " << shape_to_string(v.shape()) << ", nonzero " << nonzero << ", checksum "
            << hex64(fnv1a(v.data())) << "\n";
  return 0;
}

struct TrainFlags {
  std::string data;
  std::string schedule = "toy";
  std::string optimizer;
  std::size_t epochs1 = 0, epochs2 = 0, batch = 0;
  double lr1 = 0, lr2 = 0;
  std::string curve;
};

int run_train(const Common& c, const TrainFlags& f) {
  require(!c.out.empty(), ErrorCode::kInvalidConfig, "train needs --out <checkpoint>");
  const bool toy = f.schedule == "toy";
  const NetworkConfig config = resolve_config(c, toy ? toy_network_config() : NetworkConfig{});
  TrainSchedule s1 = toy ? TrainSchedule::toy_backbone() : TrainSchedule::backbone_default();
  TrainSchedule s2 = toy ? TrainSchedule::toy_detection() : TrainSchedule::detection_default();
  for (TrainSchedule* s : {&s1, &s2}) {
    s->seed = c.seed;
    if (!f.optimizer.empty()) s->optimizer = f.optimizer == "adam" ? OptimizerKind::kAdam : OptimizerKind::kSgdMomentum;
    if (f.batch) s->batch_size = f.batch;
  }
  // Overriding the epoch count drops decay epochs that no longer fit.
  const auto set_epochs = [](TrainSchedule& s, std::size_t epochs) {
    if (!epochs) return;
    s.epochs = epochs;
    std::erase_if(s.decay_epochs, [&](std::size_t e) { return e >= epochs; });
  };
  set_epochs(s1, f.epochs1);
  set_epochs(s2, f.epochs2);
  if (f.lr1 > 0) s1.initial_lr = f.lr1;
  if (f.lr2 > 0) s2.initial_lr = f.lr2;

  const auto samples = load_kitti_dataset(f.data);
  std::vector<TrainingSample> data;
  for (const auto& s : samples) data.push_back(prepare_sample(s, config));
  PlumeModel model(config, c.seed);
  std::cout << "training on " << data.size() << " samples, " << model.parameters().scalar_count()
            << " parameters\n";
  const TrainResult result = train(model, s1, s2, data);
  for (const auto* records : {&result.stage1, &result.stage2}) {
    for (const EpochLoss& e : epoch_curve(*records)) {
      std::cout << to_string(records->front().stage) << " epoch " << e.epoch << " loss "
                << fmt("%.6f", e.mean_loss) << "\n";
    }
  }
  const TrainSchedule schedules[] = {s1, s2};
  save_checkpoint(c.out, model_checkpoint(model, schedules));
  if (!f.curve.empty()) {
    std::vector<LossRecord> all = result.stage1;
    all.insert(all.end(), result.stage2.begin(), result.stage2.end());
    write_file_text(f.curve, format_loss_curve(all));
  }
  std::cout << "stage-1 loss ratio (last step / first step) "
            << fmt("%.4f", result.stage1.back().loss / result.stage1.front().loss) << "\n"
            << "checkpoint " << c.out << " (" << hex64(model.parameters().checksum()) << ")\n";
  return 0;
}

int run_infer(const Common& c, const std::string& data, const std::string& checkpoint, double score, double nms_iou) {
  require(!c.out.empty(), ErrorCode::kInvalidConfig, "infer needs --out <directory>");
  require(!checkpoint.empty(), ErrorCode::kInvalidConfig, "infer needs --checkpoint");
  const NetworkConfig config = resolve_config(c, toy_network_config());
  const PlumeModel model = make_model(config, c.seed, checkpoint);
  fs::create_directories(c.out);
  InferOptions options;
  options.score_threshold = score;
  options.nms_iou = nms_iou;
  for (const auto& id : list_sample_ids(data)) {
    const StereoSample sample = load_kitti_sample(data, id);
    const InferResult r = infer(model, sample, options);
    write_detections_file((fs::path(c.out) / (id + ".txt")).string(), r.detections);
    write_occupancy_file((fs::path(c.out) / (id + ".occg")).string(), r.occupancy);
    std::cout << id << ": " << r.candidates.size() << " candidates, " << r.detections.size() << " detections";
    if (!sample.cloud.empty()) {
      const OccupancyGrid labels =
          occupancy_from_points(config.grid, sample.cloud, sample.rig, config.require_both_cameras);
      std::cout << ", occupancy IoU " << fmt("%.4f", occupancy_iou(r.occupancy, labels));
    }
    std::cout << "\n";
  }
  return 0;
}

int run_eval(const Common& c, const std::string& dets, const std::string& labels, int points, const std::string& csv) {
  const ApMode mode = points == 40 ? ApMode::kFortyPoint : ApMode::kElevenPoint;
  std::vector<EvalFrame> frames;
  const fs::path label_dir = fs::is_directory(fs::path(labels) / "label_2") ? fs::path(labels) / "label_2" : fs::path(labels);
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(label_dir)) {
    if (entry.path().extension() == ".txt") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  require(!ids.empty(), ErrorCode::kEmptyDataset, "no label files in " + label_dir.string());
  for (const auto& id : ids) {
    EvalFrame frame;
    frame.ground_truth = parse_kitti_labels(read_file_text((label_dir / (id + ".txt")).string()));
    const fs::path det_path = fs::path(dets) / (id + ".txt");
    if (fs::exists(det_path)) frame.detections = read_detections_file(det_path.string());
    frames.push_back(std::move(frame));
  }
  const ApTable table = evaluate(frames, mode);
  std::ostringstream os;
  os << format_ap_table(table);
  // Difficulty-free row: every ground truth of the class counts.
  char cell[32];
  std::snprintf(cell, sizeof cell, "%-10s", "all");
  os << cell;
  for (double t : table.iou_thresholds) {
    std::string value = "n/a";
    try {
      value = fmt("%.2f", 100.0 * evaluate_all(frames, t, mode));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoGroundTruth) throw;
    }
    std::snprintf(cell, sizeof cell, " %10s", value.c_str());
    os << cell;
  }
  os << "\n";
  emit(os.str(), c.out);
  if (!csv.empty()) write_file_text(csv, format_ap_csv(table));
  return 0;
}

// Median wall time of `repeat` runs; the result checksum goes to the report.
struct BenchCase {
  std::string name;
  std::function<std::vector<double>()> run;
};

int run_bench(const Common& c, std::size_t repeat) {
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto random = [&](Shape s) {
    Tensor t(std::move(s));
    for (double& v : t.mutable_data()) v = u(rng);
    return t;
  };
  const auto values = [](const Tensor& t) { return std::vector<double>(t.data().begin(), t.data().end()); };

  const Tensor x2 = random({32, 48, 160});
  const Tensor w2 = random({32, 32, 3, 3});
  const Tensor b32 = random({32});
  const Tensor x3 = random({16, 64, 8, 64});
  const Tensor w3 = random({16, 16, 3, 3, 3});
  const Tensor b16 = random({16});
  const Tensor feat = random({16, 48, 128});
  const NetworkConfig toy = toy_network_config();
  const SyntheticScene scene = synth_scene(SyntheticSceneSpec::toy(c.seed));
  const PlumeModel model(toy, c.seed);
  std::vector<BevBox> boxes;
  for (int i = 0; i < 400; ++i) {
    BevBox b;
    b.u = 4 * u(rng);
    b.v = 10 + 4 * u(rng);
    b.w = 1.6 + 0.2 * u(rng);
    b.h = 3.9 + 0.3 * u(rng);
    b.theta = 3.14 * u(rng);
    b.score = 0.5 + 0.5 * u(rng);
    boxes.push_back(b);
  }
  const CameraRig frig = scene.sample.rig;

  std::vector<BenchCase> cases{
      {"conv2d 32->32 3x3 @48x160", [&] { return values(ops::conv2d(x2, w2, b32, 1, 1)); }},
      {"conv2d backward", [&] {
         Tensor in = x2.detach().set_requires_grad(true);
         Tensor w = w2.detach().set_requires_grad(true);
         backward(ops::sum(ops::conv2d(in, w, b32, 1, 1)));
         return std::vector<double>(w.grad().begin(), w.grad().end());
       }},
      {"conv3d 16->16 3x3x3 @64x8x64", [&] { return values(ops::conv3d(x3, w3, b16, 1, 1)); }},
      {"build_plume toy grid", [&] {
         return values(build_plume(feat, feat, toy.grid, frig, false, true).values);
       }},
      {"occupancy_from_points toy scene", [&] {
         return occupancy_from_points(toy.grid, scene.sample.cloud, frig).values;
       }},
      {"rotated_iou 400x400", [&] {
         std::vector<double> out;
         double acc = 0;
         for (const auto& a : boxes) {
           for (const auto& b : boxes) acc += rotated_iou(a, b);
         }
         out.push_back(acc);
         return out;
       }},
      {"nms 400 boxes", [&] {
         std::vector<double> out;
         for (const auto& b : nms(boxes, 0.3)) out.push_back(b.score);
         return out;
       }},
      {"toy backbone forward", [&] {
         NoGradGuard guard;
         ForwardContext ctx;
         return values(model.backbone(scene.sample.left, scene.sample.right, scene.sample.rig, ctx).occupancy);
       }},
  };

  std::ostringstream report;
  for (const auto& bc : cases) {
    std::vector<double> times;
    std::vector<double> result;
    for (std::size_t r = 0; r < std::max<std::size_t>(1, repeat); ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      result = bc.run();
      times.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(times.begin(), times.end());
    char line[160];
    std::snprintf(line, sizeof line, "%-34s %10.3f ms  (median of %zu)\n", bc.name.c_str(), times[times.size() / 2],
                  times.size());
    std::cout << line;
    report << bc.name << " " << hex64(fnv1a(result)) << "\n";
  }
  // Timings vary run to run; the report file holds only result checksums.
  if (!c.out.empty()) write_file_text(c.out, report.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plume: stereo pseudo-LiDAR feature volumes for BEV detection"};
  app.require_subcommand(1);

  Common common;
  std::size_t shapes_per_op = 20;
  std::string filter;
  bool skip_e2e = false;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference checks of every differentiable op");
  add_common(gradcheck_cmd, common);
  gradcheck_cmd->add_option("--shapes", shapes_per_op, "random shapes per op");
  gradcheck_cmd->add_option("--filter", filter, "only cases whose name contains this");
  gradcheck_cmd->add_flag("--skip-end-to-end", skip_e2e, "skip the toy-model checks");

  std::string shapes_config;
  std::size_t image_h = 384, image_w = 1248;
  auto* shapes_cmd = app.add_subcommand("shapes", "layer-by-layer output shapes and reference diff");
  add_common(shapes_cmd, common);
  shapes_cmd->add_option("config_file", shapes_config, "network config JSON");
  shapes_cmd->add_option("--image-h", image_h, "input image height");
  shapes_cmd->add_option("--image-w", image_w, "input image width");

  std::size_t count = 4;
  std::string format = "raw";
  auto* synth_cmd = app.add_subcommand("synth", "write synthetic stereo scenes in KITTI layout");
  add_common(synth_cmd, common);
  synth_cmd->add_option("--count", count, "number of scenes");
  synth_cmd->add_option("--format", format, "image format")->check(CLI::IsMember({"raw", "png"}));

  std::string cloud, calib;
  int calib_w = 1242, calib_h = 375;
  auto* occ_cmd = app.add_subcommand("occupancy", "point cloud to occupancy grid file");
  add_common(occ_cmd, common);
  occ_cmd->add_option("--cloud", cloud, "velodyne .bin file")->required();
  occ_cmd->add_option("--calib", calib, "KITTI calib file (velodyne to camera and FOV mask)");
  occ_cmd->add_option("--image-w", calib_w, "image width for the FOV mask");
  occ_cmd->add_option("--image-h", calib_h, "image height for the FOV mask");

  std::string data, sample_id, checkpoint;
  auto* plume_cmd = app.add_subcommand("build-plume", "stereo features to pseudo-LiDAR feature volume");
  add_common(plume_cmd, common);
  plume_cmd->add_option("--data", data, "dataset root")->required();
  plume_cmd->add_option("--id", sample_id, "sample id (default: first)");
  plume_cmd->add_option("--checkpoint", checkpoint, "trained weights");

  TrainFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "stage-wise training");
  add_common(train_cmd, common);
  train_cmd->add_option("--data", train_flags.data, "dataset root")->required();
  train_cmd->add_option("--schedule", train_flags.schedule, "toy or paper presets")
      ->check(CLI::IsMember({"toy", "paper"}));
  train_cmd->add_option("--optimizer", train_flags.optimizer, "override optimizer")
      ->check(CLI::IsMember({"sgd", "adam"}));
  train_cmd->add_option("--epochs1", train_flags.epochs1, "stage-1 epochs");
  train_cmd->add_option("--epochs2", train_flags.epochs2, "stage-2 epochs");
  train_cmd->add_option("--lr1", train_flags.lr1, "stage-1 initial learning rate");
  train_cmd->add_option("--lr2", train_flags.lr2, "stage-2 initial learning rate");
  train_cmd->add_option("--batch", train_flags.batch, "batch size for both stages");
  train_cmd->add_option("--curve", train_flags.curve, "per-step loss curve output");

  double score = 0.5, nms_iou = 0.3;
  auto* infer_cmd = app.add_subcommand("infer", "occupancy grids and BEV detections for a dataset");
  add_common(infer_cmd, common);
  infer_cmd->add_option("--data", data, "dataset root")->required();
  infer_cmd->add_option("--checkpoint", checkpoint, "trained weights")->required();
  infer_cmd->add_option("--score", score, "score threshold");
  infer_cmd->add_option("--nms", nms_iou, "NMS IoU threshold");

  std::string dets, labels, csv;
  int points = 11;
  auto* eval_cmd = app.add_subcommand("eval", "BEV average precision table");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--dets", dets, "directory of <id>.txt detection files")->required();
  eval_cmd->add_option("--labels", labels, "dataset root or label directory")->required();
  eval_cmd->add_option("--points", points, "11 or 40 recall points")->check(CLI::IsMember({11, 40}));
  eval_cmd->add_option("--csv", csv, "also write the table as CSV");

  std::size_t repeat = 5;
  auto* bench_cmd = app.add_subcommand("bench", "op timings");
  add_common(bench_cmd, common);
  bench_cmd->add_option("--repeat", repeat, "runs per op");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*gradcheck_cmd) return run_gradcheck(common, shapes_per_op, filter, skip_e2e);
    if (*shapes_cmd) return run_shapes(common, shapes_config, image_h, image_w);
    if (*synth_cmd) return run_synth(common, count, format);
    if (*occ_cmd) return run_occupancy(common, cloud, calib, calib_w, calib_h);
    if (*plume_cmd) return run_build_plume(common, data, sample_id, checkpoint);
    if (*train_cmd) return run_train(common, train_flags);
    if (*infer_cmd) return run_infer(common, data, checkpoint, score, nms_iou);
    if (*eval_cmd) return run_eval(common, dets, labels, points, csv);
    if (*bench_cmd) return run_bench(common, repeat);
  } catch (const Error& e) {
    std::cerr << "plume: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "plume: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
