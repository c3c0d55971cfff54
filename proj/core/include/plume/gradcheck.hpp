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
#include <random>
#include <string>
#include <vector>

#include "plume/tensor.hpp"

namespace plume::gradcheck {

struct Options {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor of the relative error, so entries whose true gradient
  // is ~0 are judged on absolute error instead.
  double floor = 1e-5;
  // Entries checked per call; 0 checks every entry of every input.
  std::size_t max_entries = 0;
};

struct Result {
  std::string name;
  std::size_t checked = 0;
  // Entries where the one-sided slopes disagree (a ReLU/max/|x| kink lies
  // within one step); their central difference is meaningless.
  std::size_t kinks = 0;
  double max_rel_error = 0.0;
  std::string worst;  // "input[i] entry j: analytic a numeric n"
  bool passed = false;
};

using LossFn = std::function<Tensor(const std::vector<Tensor>& inputs)>;

// Compares backward() of f against central differences for every input
// tensor. Inputs are marked as requiring gradients; their values are
// restored afterwards.
Result check(const std::string& name, const std::vector<Tensor>& inputs, const LossFn& f, const Options& options,
             std::mt19937_64& rng);

// sum(out * R) with R drawn from N(0, 1) under `seed`; turns any output into
// a scalar that exercises every output gradient.
Tensor project(const Tensor& out, std::uint64_t seed);

struct SuiteOptions {
  std::uint64_t seed = 1;
  std::size_t shapes_per_op = 20;
  bool end_to_end = true;
  std::string filter;  // substring of case names; empty runs everything
};

// Every differentiable op, loss and network block on `shapes_per_op` random
// shapes each, plus a toy end-to-end model (occupancy + detection loss) over
// all its parameters. `on_result` is called as cases finish.
std::vector<Result> run_suite(const SuiteOptions& options,
                              const std::function<void(const Result&)>& on_result = {});

std::vector<std::string> case_names();

}  // namespace plume::gradcheck
