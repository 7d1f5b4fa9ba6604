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

#include "et/image/mask_plan.hpp"

#include <algorithm>
#include <numeric>

namespace et::image {

std::vector<char> MaskPlan::replaced_flags() const {
  std::vector<char> flags(static_cast<std::size_t>(n_tokens), 0);
  for (Index a : replaced) flags[static_cast<std::size_t>(a)] = 1;
  return flags;
}

MaskPlan make_mask_plan(Index n_tokens, Index n_occluded, Index n_replaced, io::Rng& rng) {
  if (n_tokens < 1 || n_occluded < 0 || n_replaced < 0 || n_replaced > n_occluded || n_occluded > n_tokens) {
    throw InvalidInput("make_mask_plan: need 0 <= n_replaced <= n_occluded <= n_tokens");
  }
  std::vector<Index> order(static_cast<std::size_t>(n_tokens));
  std::iota(order.begin(), order.end(), Index{0});
  // Partial Fisher-Yates: only the first n_occluded positions are drawn.
  for (Index k = 0; k < n_occluded; ++k) {
    const Index pick = k + rng.index(n_tokens - k);
    std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(pick)]);
  }
  MaskPlan plan;
  plan.n_tokens = n_tokens;
  plan.replaced.assign(order.begin(), order.begin() + n_replaced);
  plan.untouched.assign(order.begin() + n_replaced, order.begin() + n_occluded);
  plan.occluded.assign(order.begin(), order.begin() + n_occluded);
  std::sort(plan.replaced.begin(), plan.replaced.end());
  std::sort(plan.untouched.begin(), plan.untouched.end());
  std::sort(plan.occluded.begin(), plan.occluded.end());
  return plan;
}

}  // namespace et::image
