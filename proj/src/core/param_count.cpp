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

#include "et/core/param_count.hpp"

#include "et/common.hpp"

namespace et {

std::int64_t param_count(const ModelDims& d, ParamInclusion inclusion) {
  if (d.token_dim < 1 || d.heads < 1 || d.head_dim < 1 || d.memories < 1) {
    throw InvalidInput("param_count: block dimensions must be positive");
  }
  const std::int64_t block = 2 * d.head_dim * d.heads * d.token_dim + d.memories * d.token_dim;
  if (inclusion == ParamInclusion::BlockOnly) return block;
  if (d.tokens < 1 || d.patch_dim < 1) {
    throw InvalidInput("param_count: embedding dimensions must be positive");
  }
  const std::int64_t encoder = d.patch_dim * d.token_dim;
  const std::int64_t decoder = d.token_dim * d.patch_dim;
  const std::int64_t position = d.tokens * d.token_dim;
  const std::int64_t mask_token = d.token_dim;
  return block + encoder + decoder + position + mask_token;
}

}  // namespace et
