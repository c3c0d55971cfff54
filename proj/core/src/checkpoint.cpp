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

#include "plume/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "plume/binary_io.hpp"
#include "plume/error.hpp"

namespace plume {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.compare(0, prefix.size(), prefix) == 0; }

}  // namespace

Tensor ParameterStore::create(const std::string& name, Shape shape) {
  Tensor t(std::move(shape), 0.0);
  t.set_requires_grad(true);
  insert(name, t);
  return t;
}

void ParameterStore::insert(const std::string& name, Tensor tensor) {
  require(!contains(name), ErrorCode::kInvalidConfig, "duplicate parameter " + name);
  index_[name] = entries_.size();
  entries_.emplace_back(name, std::move(tensor));
}

Tensor ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  require(it != index_.end(), ErrorCode::kCheckpointMismatch, "unknown parameter " + name);
  return entries_[it->second].second;
}

std::vector<Tensor> ParameterStore::with_prefix(const std::string& prefix) const {
  std::vector<Tensor> out;
  for (const auto& [name, t] : entries_) {
    if (starts_with(name, prefix)) out.push_back(t);
  }
  return out;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.numel();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

std::uint64_t ParameterStore::checksum(const std::string& prefix) const {
  std::uint64_t h = kFnvOffset;
  for (const auto& [name, t] : entries_) {
    if (!starts_with(name, prefix)) continue;
    fnv_mix(h, name.data(), name.size());
    for (std::size_t e : t.shape()) fnv_mix(h, &e, sizeof(e));
    for (double v : t.data()) fnv_mix(h, &v, sizeof(v));
  }
  return h;
}

void init_uniform_fan_in(Tensor& weight, std::size_t fan_in, std::mt19937_64& rng, double gain) {
  require(fan_in > 0, ErrorCode::kInvalidConfig, "fan_in must be positive");
  const double bound = gain * std::sqrt(6.0 / static_cast<double>(fan_in));
  for (double& v : weight.mutable_data()) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    v = (2.0 * u - 1.0) * bound;
  }
}

std::vector<std::uint8_t> encode_checkpoint(const std::vector<CheckpointRecord>& records) {
  ByteWriter w;
  w.bytes("PLMW", 4);
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const auto& r : records) {
    require(r.name.size() <= 0xFFFF && r.shape.size() <= 0xFF, ErrorCode::kInvalidConfig,
            "checkpoint record too large: " + r.name);
    require(r.values.size() == shape_numel(r.shape), ErrorCode::kShapeMismatch, "record size mismatch: " + r.name);
    w.u16(static_cast<std::uint16_t>(r.name.size()));
    w.bytes(r.name.data(), r.name.size());
    w.u8(static_cast<std::uint8_t>(r.shape.size()));
    for (std::size_t e : r.shape) w.u32(static_cast<std::uint32_t>(e));
    for (float v : r.values) w.f32(v);
  }
  return w.take();
}

std::vector<CheckpointRecord> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  char magic[4];
  r.bytes(magic, 4);
  require(std::memcmp(magic, "PLMW", 4) == 0, ErrorCode::kCheckpointMismatch, "bad checkpoint magic");
  const std::uint32_t count = r.u32();
  std::vector<CheckpointRecord> records;
  records.reserve(count);
  for (std::uint32_t n = 0; n < count; ++n) {
    CheckpointRecord rec;
    rec.name.resize(r.u16());
    r.bytes(rec.name.data(), rec.name.size());
    const std::uint8_t rank = r.u8();
    for (std::uint8_t i = 0; i < rank; ++i) rec.shape.push_back(r.u32());
    rec.values.resize(shape_numel(rec.shape));
    for (float& v : rec.values) v = r.f32();
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<CheckpointRecord> records_from_store(const ParameterStore& store, const std::string& prefix) {
  std::vector<CheckpointRecord> out;
  for (const auto& [name, t] : store.entries()) {
    if (!starts_with(name, prefix)) continue;
    CheckpointRecord rec{name, t.shape(), {}};
    rec.values.reserve(t.numel());
    for (double v : t.data()) rec.values.push_back(static_cast<float>(v));
    out.push_back(std::move(rec));
  }
  return out;
}

void load_into_store(ParameterStore& store, const std::vector<CheckpointRecord>& records) {
  std::size_t loaded = 0;
  for (const auto& rec : records) {
    if (starts_with(rec.name, "meta.")) continue;
    require(store.contains(rec.name), ErrorCode::kCheckpointMismatch, "checkpoint has unknown tensor " + rec.name);
    Tensor t = store.get(rec.name);
    require(t.shape() == rec.shape, ErrorCode::kCheckpointMismatch,
            rec.name + ": checkpoint shape " + shape_to_string(rec.shape) + " vs model " + shape_to_string(t.shape()));
    auto dst = t.mutable_data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = rec.values[i];
    ++loaded;
  }
  require(loaded == store.size(), ErrorCode::kCheckpointMismatch,
          "checkpoint covers " + std::to_string(loaded) + " of " + std::to_string(store.size()) + " tensors");
}

void save_checkpoint(const std::string& path, const std::vector<CheckpointRecord>& records) {
  write_file_bytes(path, encode_checkpoint(records));
}

std::vector<CheckpointRecord> load_checkpoint(const std::string& path) {
  return decode_checkpoint(read_file_bytes(path));
}

}  // namespace plume
