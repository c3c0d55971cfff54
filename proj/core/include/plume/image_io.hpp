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

#include <string>

#include "plume/tensor.hpp"

namespace plume {

// Images are [3, H, W] tensors with values in [0, 1].

// 8-bit RGB(A)/gray PNG; alpha is dropped, gray is replicated.
Tensor read_png(const std::string& path);
// Values are clamped to [0, 1] and rounded to 8 bits.
void write_png(const std::string& path, const Tensor& image);

// Lossless "RAWF" file: magic, u32 C, H, W little-endian, then float32 values.
Tensor read_raw_image(const std::string& path);
void write_raw_image(const std::string& path, const Tensor& image);

// Dispatches on the extension (".png" or ".rawf").
Tensor read_image(const std::string& path);
void write_image(const std::string& path, const Tensor& image);

}  // namespace plume
