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

#include <random>

#include "plume/gradcheck.hpp"
#include "plume/ops.hpp"

namespace plume {
namespace {

// x^2 forward with a backward that is off by 1%.
Tensor skewed_square(const Tensor& x) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * x.data()[i];
  auto xi = x.impl();
  return detail::make_result(x.shape(), std::move(out), {x}, "skewed_square", [xi](const detail::TensorImpl& o) {
    auto g = xi->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.02 * xi->data[i] * o.grad[i];
  });
}

TEST(Gradcheck, AcceptsCorrectGradient) {
  std::mt19937_64 rng(1);
  Tensor x(Shape{5}, std::vector<double>{0.3, -1.2, 2.0, 0.7, -0.1});
  const auto r = gradcheck::check("square", {x}, [](const std::vector<Tensor>& in) {
    return gradcheck::project(ops::square(in[0]), 3);
  }, {}, rng);
  EXPECT_TRUE(r.passed) << r.worst;
  EXPECT_EQ(r.checked, 5u);
  EXPECT_LT(r.max_rel_error, 1e-8);
}

TEST(Gradcheck, RejectsWrongGradient) {
  std::mt19937_64 rng(1);
  Tensor x(Shape{5}, std::vector<double>{0.3, -1.2, 2.0, 0.7, -0.1});
  const auto r = gradcheck::check("skewed", {x}, [](const std::vector<Tensor>& in) {
    return gradcheck::project(skewed_square(in[0]), 3);
  }, {}, rng);
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.max_rel_error, 5e-3);
}

TEST(Gradcheck, RestoresInputs) {
  std::mt19937_64 rng(2);
  Tensor x(Shape{3}, std::vector<double>{1, 2, 3});
  gradcheck::check("relu", {x}, [](const std::vector<Tensor>& in) { return ops::sum(ops::relu(in[0])); }, {}, rng);
  EXPECT_EQ(x.data()[0], 1.0);
  EXPECT_EQ(x.data()[2], 3.0);
}

TEST(Gradcheck, OperatorSuiteOnFewShapes) {
  gradcheck::SuiteOptions options;
  options.seed = 11;
  options.shapes_per_op = 2;
  options.end_to_end = false;
  std::size_t cases = 0;
  for (const auto& r : gradcheck::run_suite(options)) {
    EXPECT_TRUE(r.passed) << r.name << ": " << r.worst;
    ++cases;
  }
  EXPECT_EQ(cases, gradcheck::case_names().size() - 1);
}

}  // namespace
}  // namespace plume
