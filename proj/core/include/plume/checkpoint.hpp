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
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "plume/tensor.hpp"

namespace plume {

// Named, insertion-ordered set of trainable tensors.
class ParameterStore {
 public:
  // Registers a zero tensor and returns the shared handle.
  Tensor create(const std::string& name, Shape shape);
  void insert(const std::string& name, Tensor tensor);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor get(const std::string& name) const;
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::vector<Tensor> with_prefix(const std::string& prefix) const;
  std::size_t scalar_count() const;
  void zero_grad();

  // FNV-1a over names, shapes and values of all entries matching the prefix.
  std::uint64_t checksum(const std::string& prefix = "") const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::map<std::string, std::size_t> index_;
};

// Fan-in scaled uniform: U(-sqrt(6 / fan_in), sqrt(6 / fan_in)) * gain.
void init_uniform_fan_in(Tensor& weight, std::size_t fan_in, std::mt19937_64& rng, double gain = 1.0);

// "PLMW" checkpoint: magic, u32 count, then per tensor: u16 name length,
// name bytes, u8 rank, u32 extents, float32 little-endian values.
struct CheckpointRecord {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

std::vector<std::uint8_t> encode_checkpoint(const std::vector<CheckpointRecord>& records);
std::vector<CheckpointRecord> decode_checkpoint(std::span<const std::uint8_t> bytes);

std::vector<CheckpointRecord> records_from_store(const ParameterStore& store, const std::string& prefix = "");
// Copies values into existing entries; kCheckpointMismatch on missing names or
// shape differences. Records whose names start with "meta." are skipped.
void load_into_store(ParameterStore& store, const std::vector<CheckpointRecord>& records);

void save_checkpoint(const std::string& path, const std::vector<CheckpointRecord>& records);
std::vector<CheckpointRecord> load_checkpoint(const std::string& path);

}  // namespace plume
