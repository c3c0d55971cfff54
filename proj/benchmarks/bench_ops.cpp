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


#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "plume/harness.hpp"
#include "plume/networks.hpp"
#include "plume/ops.hpp"
#include "plume/postproc.hpp"
#include "plume/synthetic.hpp"
#include "plume/voxel_grid.hpp"

namespace {

using namespace plume;

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(std::move(shape));
  for (double& v : t.mutable_data()) v = u(rng);
  return t;
}

void BM_Conv2d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_tensor({c, 48, 160}, 1);
  const Tensor w = random_tensor({c, c, 3, 3}, 2);
  const Tensor b = random_tensor({c}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(x, w, b, 1, 1));
}
BENCHMARK(BM_Conv2d)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Conv2dBackward(benchmark::State& state) {
  const Tensor x = random_tensor({16, 48, 160}, 1);
  const Tensor w0 = random_tensor({16, 16, 3, 3}, 2);
  const Tensor b = random_tensor({16}, 3);
  for (auto _ : state) {
    Tensor w = w0.detach().set_requires_grad(true);
    backward(ops::sum(ops::conv2d(x, w, b, 1, 1)));
    benchmark::DoNotOptimize(w.grad().data());
  }
}
BENCHMARK(BM_Conv2dBackward)->Unit(benchmark::kMillisecond);

void BM_Conv3d(benchmark::State& state) {
  const Tensor x = random_tensor({8, 64, 8, 64}, 1);
  const Tensor w = random_tensor({8, 8, 3, 3, 3}, 2);
  const Tensor b = random_tensor({8}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv3d(x, w, b, 1, 1));
}
BENCHMARK(BM_Conv3d)->Unit(benchmark::kMillisecond);

void BM_BuildPlume(benchmark::State& state) {
  const SyntheticScene scene = synth_scene(SyntheticSceneSpec::toy(1));
  const Tensor f = random_tensor({4, 48, 128}, 2);
  const NetworkConfig config = toy_network_config();
  for (auto _ : state) benchmark::DoNotOptimize(build_plume(f, f, config.grid, scene.sample.rig, false));
}
BENCHMARK(BM_BuildPlume)->Unit(benchmark::kMillisecond);

void BM_OccupancyFromPoints(benchmark::State& state) {
  const SyntheticScene scene = synth_scene(SyntheticSceneSpec::toy(1));
  const NetworkConfig config = toy_network_config();
  for (auto _ : state) {
    benchmark::DoNotOptimize(occupancy_from_points(config.grid, scene.sample.cloud, scene.sample.rig));
  }
}
BENCHMARK(BM_OccupancyFromPoints)->Unit(benchmark::kMillisecond);

std::vector<BevBox> random_boxes(std::size_t n) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<BevBox> boxes(n);
  for (BevBox& b : boxes) {
    b.u = 4 * u(rng);
    b.v = 10 + 4 * u(rng);
    b.w = 1.6 + 0.2 * u(rng);
    b.h = 3.9 + 0.3 * u(rng);
    b.theta = 3.1 * u(rng);
    b.score = 0.5 + 0.5 * u(rng);
  }
  return boxes;
}

void BM_RotatedIou(benchmark::State& state) {
  const auto boxes = random_boxes(256);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rotated_iou(boxes[i % 256], boxes[(i * 7 + 3) % 256]));
    ++i;
  }
}
BENCHMARK(BM_RotatedIou);

void BM_Nms(benchmark::State& state) {
  const auto boxes = random_boxes(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(nms(boxes, 0.3));
}
BENCHMARK(BM_Nms)->Arg(64)->Arg(256);

void BM_ToyBackboneForward(benchmark::State& state) {
  const SyntheticScene scene = synth_scene(SyntheticSceneSpec::toy(1));
  const PlumeModel model(toy_network_config(), 7);
  for (auto _ : state) {
    NoGradGuard guard;
    ForwardContext ctx;
    benchmark::DoNotOptimize(model.backbone(scene.sample.left, scene.sample.right, scene.sample.rig, ctx));
  }
}
BENCHMARK(BM_ToyBackboneForward)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
