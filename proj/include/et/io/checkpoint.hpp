// Copyright 2026 The Energy Transformer Authors. All Rights Reserved.
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
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "et/ad/tensor_view.hpp"

namespace et::io {

/// Container layout (all integers and doubles little-endian):
///
///   "ETCK"            4 bytes magic
///   version           u32 (currently 1)
///   tensor count      u64
///   per tensor:
///     name length     u32, then that many UTF-8 bytes
///     rank            u32
///     dims            rank x u64
///     values          prod(dims) x IEEE-754 binary64, row-major over dims
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> values;

  bool operator==(const NamedTensor&) const = default;
};

class Checkpoint {
 public:
  void add(NamedTensor t);
  bool contains(std::string_view name) const;
  /// Throws FormatError naming the missing tensor.
  const NamedTensor& get(std::string_view name) const;
  const std::vector<NamedTensor>& tensors() const { return tensors_; }

  bool operator==(const Checkpoint&) const = default;

 private:
  std::vector<NamedTensor> tensors_;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Snapshot of parameter views (converted to row-major order).
Checkpoint to_checkpoint(const std::vector<ad::ConstTensorView>& views);
/// Copies tensors into views; ShapeError names the first tensor whose shape differs.
void restore(const Checkpoint& ckpt, const std::vector<ad::TensorView>& views);

}  // namespace et::io
