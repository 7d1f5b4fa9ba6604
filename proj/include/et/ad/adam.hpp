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
#include <vector>

#include "et/ad/tensor_view.hpp"

namespace et::ad {

struct AdamConfig {
  double lr = 1e-3;
  double b1 = 0.9;
  double b2 = 0.99;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled, applied to tensors flagged `decay`
  double grad_clip = 0.0;     // global L2 norm threshold; <= 0 disables
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<Eigen::ArrayXd> first_moment;
  std::vector<Eigen::ArrayXd> second_moment;
};

struct AdamReport {
  double grad_norm = 0;     // before clipping
  double applied_norm = 0;  // after clipping
};

/// One bias-corrected Adam update with decoupled weight decay. Gradients are
/// clipped by global norm first; decay is applied to the weights directly
/// and never enters the moments. Throws DivergenceError on a non-finite
/// gradient, leaving params and state untouched.
AdamReport adam_step(const std::vector<TensorView>& params, const std::vector<ConstTensorView>& grads,
                     AdamState& state);

}  // namespace et::ad
