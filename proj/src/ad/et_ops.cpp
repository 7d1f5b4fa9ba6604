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

#include "et/ad/et_ops.hpp"

namespace et::ad {

EtVars bind_et(Tape& tape, const EtParams<double>& p, Index n_tokens, bool beta_learnable) {
  p.validate();
  EtVars v;
  v.gamma = tape.scalar_leaf(p.norm.gamma);
  v.delta = tape.leaf(p.norm.delta.transpose());
  v.w_key = tape.leaf(p.attn.w_key);
  v.w_query = tape.leaf(p.attn.w_query);
  v.xi = tape.leaf(p.hopfield.xi);
  v.beta = beta_learnable ? tape.scalar_leaf(p.attn.beta)
                          : tape.constant(Matrix::Constant(1, 1, p.attn.beta));
  v.epsilon = p.norm.epsilon;
  v.heads = p.attn.heads;
  v.activation = p.hopfield.activation;
  v.enable_attn = p.enable_attn;
  v.enable_hopfield = p.enable_hopfield;
  if (p.enable_attn) {
    v.pattern = std::make_shared<const AttentionPattern>(AttentionPattern::build(n_tokens, p.attn.mask));
  }
  return v;
}

void collect_et_grads(const Gradients& grads, const EtVars& vars, EtParams<double>& out) {
  out.norm.gamma = grads.wrt(vars.gamma)(0, 0);
  out.norm.delta = grads.wrt(vars.delta).transpose();
  out.attn.w_key = grads.wrt(vars.w_key);
  out.attn.w_query = grads.wrt(vars.w_query);
  out.hopfield.xi = grads.wrt(vars.xi);
  out.attn.beta = grads.wrt(vars.beta)(0, 0);
}

Var layer_norm_rows(Var x, Var gamma, Var delta, double epsilon) {
  return add_row(scale_by(rms_normalize_rows(mean_subtract_rows(x), epsilon), gamma), delta);
}

namespace {

struct HeadProjections {
  Var keys;
  Var queries;
  Var w_key;
  Var w_query;
};

HeadProjections project_head(Var g, const EtVars& v, Index h) {
  const Index y = v.w_key.rows() / v.heads;
  HeadProjections out;
  out.w_key = v.heads == 1 ? v.w_key : slice_rows(v.w_key, h * y, y);
  out.w_query = v.heads == 1 ? v.w_query : slice_rows(v.w_query, h * y, y);
  out.keys = matmul_nt(g, out.w_key);
  out.queries = matmul_nt(g, out.w_query);
  return out;
}

}  // namespace

Var attention_energy(Var g, const EtVars& v) {
  Var total;
  for (Index h = 0; h < v.heads; ++h) {
    const HeadProjections p = project_head(g, v, h);
    Var scores = scale_by(pattern_scores(p.keys, p.queries, v.pattern), v.beta);
    Var head = sum(pattern_logsumexp(scores, v.pattern));
    total = total.valid() ? total + head : head;
  }
  return scale(scale_by(total, reciprocal(v.beta)), -1.0);
}

Var hopfield_energy(Var g, const EtVars& v) {
  Var hidden = matmul_nt(g, v.xi);
  return std::visit(
      [&](const auto& act) -> Var {
        using A = std::decay_t<decltype(act)>;
        if constexpr (std::is_same_v<A, Relu>) {
          return scale(sum(square(relu(hidden))), -0.5);
        } else if constexpr (std::is_same_v<A, Power>) {
          return scale(sum(power(relu(hidden), 2.0 * act.order)), -0.5);
        } else {
          return scale(sum(logsumexp_rows(scale(hidden, act.beta))), -1.0 / act.beta);
        }
      },
      v.activation);
}

Var et_energy(Var g, const EtVars& v) {
  if (v.enable_attn && v.enable_hopfield) return attention_energy(g, v) + hopfield_energy(g, v);
  if (v.enable_attn) return attention_energy(g, v);
  return hopfield_energy(g, v);
}

Var et_descent(Var g, const EtVars& v) {
  Var total;
  auto add = [&](Var term) { total = total.valid() ? total + term : term; };
  if (v.enable_attn) {
    for (Index h = 0; h < v.heads; ++h) {
      const HeadProjections p = project_head(g, v, h);
      Var probs = pattern_softmax(scale_by(pattern_scores(p.keys, p.queries, v.pattern), v.beta), v.pattern);
      add(matmul(pattern_aggregate(probs, p.keys, v.pattern), p.w_query));
      add(matmul(pattern_aggregate_transposed(probs, p.queries, v.pattern), p.w_key));
    }
  }
  if (v.enable_hopfield) {
    Var hidden = matmul_nt(g, v.xi);
    Var drive = std::visit(
        [&](const auto& act) -> Var {
          using A = std::decay_t<decltype(act)>;
          if constexpr (std::is_same_v<A, Relu>) {
            return relu(hidden);
          } else if constexpr (std::is_same_v<A, Power>) {
            return scale(power(relu(hidden), 2.0 * act.order - 1.0), double(act.order));
          } else {
            return softmax_rows(scale(hidden, act.beta));
          }
        },
        v.activation);
    add(matmul(drive, v.xi));
  }
  return total;
}

Var et_step(Var x, const EtVars& v, double alpha) {
  Var g = layer_norm_rows(x, v.gamma, v.delta, v.epsilon);
  return x + scale(et_descent(g, v), alpha);
}

}  // namespace et::ad
