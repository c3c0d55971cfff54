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

#include "plume/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "plume/binary_io.hpp"
#include "plume/error.hpp"

namespace plume {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void check_image(const Tensor& image) {
  require(image.rank() == 3 && image.dim(0) == 3 && image.dim(1) > 0 && image.dim(2) > 0, ErrorCode::kShapeMismatch,
          "image must be [3, H, W], got " + shape_to_string(image.shape()));
}

}  // namespace

Tensor read_png(const std::string& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    fail(ErrorCode::kIoError, "cannot read PNG " + path + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&img);
    fail(ErrorCode::kIoError, "cannot decode PNG " + path + ": " + img.message);
  }
  const std::size_t h = img.height;
  const std::size_t w = img.width;
  std::vector<double> values(3 * h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) values[(c * h + y) * w + x] = buffer[(y * w + x) * 3 + c] / 255.0;
    }
  }
  return Tensor({3, h, w}, std::move(values));
}

void write_png(const std::string& path, const Tensor& image) {
  check_image(image);
  const std::size_t h = image.dim(1);
  const std::size_t w = image.dim(2);
  const auto data = image.data();
  std::vector<png_byte> buffer(3 * h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp(data[(c * h + y) * w + x], 0.0, 1.0);
        buffer[(y * w + x) * 3 + c] = static_cast<png_byte>(std::lround(v * 255.0));
      }
    }
  }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    fail(ErrorCode::kIoError, "cannot write PNG " + path + ": " + img.message);
  }
}

Tensor read_raw_image(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  ByteReader r(bytes);
  char magic[4];
  r.bytes(magic, 4);
  require(std::memcmp(magic, "RAWF", 4) == 0, ErrorCode::kIoError, path + " is not a RAWF image");
  const std::size_t c = r.u32();
  const std::size_t h = r.u32();
  const std::size_t w = r.u32();
  std::vector<double> values(c * h * w);
  for (double& v : values) v = r.f32();
  return Tensor({c, h, w}, std::move(values));
}

void write_raw_image(const std::string& path, const Tensor& image) {
  check_image(image);
  ByteWriter w;
  w.bytes("RAWF", 4);
  for (std::size_t e : image.shape()) w.u32(static_cast<std::uint32_t>(e));
  for (double v : image.data()) w.f32(static_cast<float>(v));
  write_file_bytes(path, w.take());
}

Tensor read_image(const std::string& path) {
  if (ends_with(path, ".rawf")) return read_raw_image(path);
  return read_png(path);
}

void write_image(const std::string& path, const Tensor& image) {
  if (ends_with(path, ".rawf")) {
    write_raw_image(path, image);
  } else {
    write_png(path, image);
  }
}

}  // namespace plume
