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

#include <vector>

#include "et/common.hpp"
#include "et/io/rng.hpp"

namespace et::image {

/// Which tokens count toward the loss (occluded) and which of those have
/// their content swapped for the mask token (replaced). Index lists are sorted.
struct MaskPlan {
  Index n_tokens = 0;
  std::vector<Index> occluded;
  std::vector<Index> replaced;
  std::vector<Index> untouched;

  /// One flag per token, set for replaced tokens.
  std::vector<char> replaced_flags() const;
};

/// Uniform draw without replacement: n_occluded tokens, the first n_replaced
/// of which (in draw order) are replaced.
MaskPlan make_mask_plan(Index n_tokens, Index n_occluded, Index n_replaced, io::Rng& rng);

}  // namespace et::image
