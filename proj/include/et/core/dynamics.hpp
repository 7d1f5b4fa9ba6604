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

#include "et/core/attention.hpp"
#include "et/core/hopfield.hpp"
#include "et/core/layer_norm.hpp"

namespace et {

/// Everything one ET block needs: the normalization, both energy modules and
/// the switches used for ablations.
template <typename Scalar>
struct EtParams {
  LayerNormParams<Scalar> norm;
  AttentionParams<Scalar> attn;
  HopfieldParams<Scalar> hopfield;
  bool enable_attn = true;
  bool enable_hopfield = true;

  Index dim() const { return norm.dim(); }

  void validate() const {
    if (!enable_attn && !enable_hopfield) {
      throw InvalidInput("et block: at least one of attention / hopfield must be enabled");
    }
    norm.validate();
    if (!(norm.epsilon > Scalar(0))) throw InvalidInput("et block: layer norm epsilon must be > 0");
    attn.validate();
    hopfield.validate();
    if (attn.dim() != dim() || hopfield.dim() != dim()) {
      throw ShapeError("et block: token width differs between norm, attention and hopfield");
    }
  }
};

template <typename Scalar>
struct EnergyBreakdown {
  Scalar e_att = 0;
  Scalar e_hn = 0;
  Scalar e_total = 0;
};

/// Token update plus bookkeeping for the energy at the state it was computed from.
template <typename Scalar>
struct TrajectoryPoint {
  Mat<Scalar> x;
  EnergyBreakdown<Scalar> energy;
};

/// Precomputed attention pattern for a fixed token count. Reusing it across
/// steps avoids rebuilding the mask every iteration.
template <typename Scalar>
class EtBlock {
 public:
  EtBlock(EtParams<Scalar> params, Index n_tokens)
      : params_(validated(std::move(params))),
        pattern_(params_.enable_attn ? AttentionPattern::build(n_tokens, params_.attn.mask)
                                     : AttentionPattern{}),
        n_tokens_(n_tokens) {}

  const EtParams<Scalar>& params() const { return params_; }
  const AttentionPattern& pattern() const { return pattern_; }

  EnergyBreakdown<Scalar> energy(const Mat<Scalar>& x) const {
    check_tokens(x);
    return energy_of_normalized(layer_norm_rows(x, params_.norm));
  }

  EnergyBreakdown<Scalar> energy_of_normalized(const Mat<Scalar>& g) const {
    EnergyBreakdown<Scalar> e;
    if (params_.enable_attn) e.e_att = attention_energy(g, params_.attn, pattern_);
    if (params_.enable_hopfield) e.e_hn = hopfield_energy(g, params_.hopfield);
    e.e_total = e.e_att + e.e_hn;
    return e;
  }

  /// dE/dg at the normalized tokens g (note the sign: this is the ascent direction).
  Mat<Scalar> energy_grad(const Mat<Scalar>& g) const {
    Mat<Scalar> descent = Mat<Scalar>::Zero(g.rows(), g.cols());
    if (params_.enable_attn) descent += attention_grad(g, params_.attn, pattern_);
    if (params_.enable_hopfield) descent += hopfield_grad(g, params_.hopfield);
    return -descent;
  }

  /// x' = x - alpha * dE/dg evaluated at g = layer_norm(x).
  Mat<Scalar> step(const Mat<Scalar>& x, Scalar alpha) const {
    check_tokens(x);
    if (!(alpha >= Scalar(0))) throw InvalidInput("et_step: alpha must be non-negative");
    if (alpha == Scalar(0)) return x;
    return x - alpha * energy_grad(layer_norm_rows(x, params_.norm));
  }

  /// T+1 states: the input and each of T updates, with their energies.
  std::vector<TrajectoryPoint<Scalar>> forward(const Mat<Scalar>& x0, Scalar alpha,
                                               int steps) const {
    if (steps < 1) throw InvalidInput("et_forward: at least one step required");
    std::vector<TrajectoryPoint<Scalar>> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    out.push_back({x0, energy(x0)});
    for (int t = 0; t < steps; ++t) {
      Mat<Scalar> next = step(out.back().x, alpha);
      EnergyBreakdown<Scalar> e = energy(next);
      out.push_back({std::move(next), e});
    }
    return out;
  }

 private:
  static EtParams<Scalar> validated(EtParams<Scalar> p) {
    p.validate();
    return p;
  }

  void check_tokens(const Mat<Scalar>& x) const {
    if (x.rows() != n_tokens_) throw ShapeError("et block: token count does not match block");
    if (x.cols() != params_.dim()) throw ShapeError("et block: token width does not match block");
    if (x.rows() < 1) throw InvalidInput("et block: need at least one token");
    if (!all_finite(x)) throw InvalidInput("et block: non-finite tokens");
  }

  EtParams<Scalar> params_;
  AttentionPattern pattern_;
  Index n_tokens_;
};

// Free-function forms for one-off evaluations.

template <typename Scalar>
EnergyBreakdown<Scalar> total_energy(const Mat<Scalar>& x, const EtParams<Scalar>& p) {
  return EtBlock<Scalar>(p, x.rows()).energy(x);
}

template <typename Scalar>
Mat<Scalar> et_step(const Mat<Scalar>& x, const EtParams<Scalar>& p, Scalar alpha) {
  return EtBlock<Scalar>(p, x.rows()).step(x, alpha);
}

template <typename Scalar>
std::vector<TrajectoryPoint<Scalar>> et_forward(const Mat<Scalar>& x0, const EtParams<Scalar>& p,
                                                Scalar alpha, int steps) {
  return EtBlock<Scalar>(p, x0.rows()).forward(x0, alpha, steps);
}

}  // namespace et
