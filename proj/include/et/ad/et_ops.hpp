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

#include <memory>

#include "et/ad/tape.hpp"
#include "et/core/dynamics.hpp"

namespace et::ad {

/// Tape handles for the learnable tensors of one ET block plus the fixed
/// configuration (activation, heads, mask, switches) taken from EtParams.
struct EtVars {
  Var gamma;    // 1 x 1
  Var delta;    // 1 x D
  Var w_key;    // H*Y x D
  Var w_query;  // H*Y x D
  Var xi;       // M x D
  Var beta;     // 1 x 1
  double epsilon = 1e-5;
  Index heads = 1;
  Activation activation = Relu{};
  bool enable_attn = true;
  bool enable_hopfield = true;
  std::shared_ptr<const AttentionPattern> pattern;
};

/// Records the block's tensors as tape leaves. When `beta_learnable` is false
/// beta is recorded as a constant.
EtVars bind_et(Tape& tape, const EtParams<double>& p, Index n_tokens, bool beta_learnable = false);

/// Gradients for the block's tensors, laid out like EtParams.
void collect_et_grads(const Gradients& grads, const EtVars& vars, EtParams<double>& out);

Var layer_norm_rows(Var x, Var gamma, Var delta, double epsilon);

/// E_att + E_hn of normalized tokens g (enabled modules only), 1 x 1.
Var et_energy(Var g, const EtVars& v);
Var attention_energy(Var g, const EtVars& v);
Var hopfield_energy(Var g, const EtVars& v);

/// -dE/dg expressed with tape primitives so that it can be differentiated again.
Var et_descent(Var g, const EtVars& v);

/// x - alpha * dE/dg(layer_norm(x)).
Var et_step(Var x, const EtVars& v, double alpha);

}  // namespace et::ad
