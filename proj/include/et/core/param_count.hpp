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

namespace et {

struct ModelDims {
  std::int64_t token_dim = 0;   // D
  std::int64_t heads = 0;       // H
  std::int64_t head_dim = 0;    // Y
  std::int64_t memories = 0;    // M
  std::int64_t tokens = 0;      // N
  std::int64_t patch_dim = 0;   // P
};

enum class ParamInclusion { BlockOnly, BlockPlusEmbeddings };

/// Learnable weights of one block, biases excluded. There is no value matrix
/// and the Hopfield module owns a single matrix, so a block is
/// 2*Y*H*D + M*D. Embeddings add the encoder and decoder kernels, the
/// position bias and the mask token.
std::int64_t param_count(const ModelDims& dims, ParamInclusion inclusion);

}  // namespace et
