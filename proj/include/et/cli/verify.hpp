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
#include <string>
#include <vector>

#include "et/core/hopfield.hpp"

namespace et::cli {

struct GradCheckOptions {
  int instances = 20;
  double tolerance = 1e-6;
  double fd_step = 1e-5;
  std::uint64_t seed = 0;
  Activation image_activation = Relu{};  // the energy checks always cover every activation
  int image_steps = 3;
  /// Test hook: the analytic gradient of this tensor is scaled by 1.001.
  std::string inject_fault;
};

struct TensorCheck {
  std::string name;
  double worst = 0;               // largest relative error seen
  std::uint64_t worst_seed = 0;   // instance seed where it occurred
  int checked = 0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  bool passed() const;
};

/// Compares analytic gradients against central differences on random small
/// instances (instance i uses seed + i):
///   - dE/dg of the attention energy under every mask mode,
///   - dE/dg of the Hopfield energy under every activation,
///   - the masked image loss through T unrolled steps, for every parameter tensor.
GradCheckReport run_grad_checks(const GradCheckOptions& options);

/// Familiar symbol for a tensor name where there is one ("et.w_query" -> "W^Q").
std::string display_name(const std::string& tensor);

/// `tensor,worst_rel_err,instance_seed,checked,status` rows.
std::string grad_report_csv(const GradCheckReport& report);

}  // namespace et::cli
