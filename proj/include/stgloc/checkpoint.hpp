// Copyright 2026 The stgloc Authors.
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

// Parameter checkpoints: "DORI", u32 version, then one record per parameter
// until end of file: u32 name length, UTF-8 name, u32 rank, rank x u64 dims,
// f64 little-endian payload in row-major order.

#ifndef STGLOC_CHECKPOINT_HPP_
#define STGLOC_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "stgloc/parameters.hpp"

namespace stg {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  std::vector<std::uint64_t> dims;
  Matrix value;
};

void save_checkpoint(const std::string& path, const ParameterSet& params);
std::vector<NamedArray> read_checkpoint(const std::string& path);

/// Copies checkpoint values into `params`. Names, order and shapes must agree
/// exactly, otherwise CheckpointError describes the first mismatch.
void load_checkpoint(const std::string& path, ParameterSet& params);

}  // namespace stg

#endif  // STGLOC_CHECKPOINT_HPP_
