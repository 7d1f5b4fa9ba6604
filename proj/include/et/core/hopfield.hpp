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

#include <cmath>
#include <variant>

#include "et/common.hpp"

namespace et {

struct Relu {};
/// r(h) = relu(h)^order, so the energy term is -1/2 relu(h)^(2 order).
struct Power {
  int order = 2;
};
/// Modern Hopfield variant: E = -(1/beta) sum_B log sum_mu exp(beta h_muB).
struct Softmax {
  double beta = 1.0;
};
using Activation = std::variant<Relu, Power, Softmax>;

/// Memories xi (M x D), shared between the projection into the hidden space
/// and the projection back into token space.
template <typename Scalar>
struct HopfieldParams {
  Mat<Scalar> xi;
  Activation activation = Relu{};

  Index memories() const { return xi.rows(); }
  Index dim() const { return xi.cols(); }

  void validate() const {
    if (xi.rows() < 1) throw ShapeError("hopfield: at least one memory required");
    if (!all_finite(xi)) throw InvalidInput("hopfield: non-finite memories");
    if (const auto* p = std::get_if<Power>(&activation); p && p->order < 1) {
      throw InvalidInput("hopfield: power order must be >= 1");
    }
    if (const auto* s = std::get_if<Softmax>(&activation); s && !(s->beta > 0)) {
      throw InvalidInput("hopfield: softmax beta must be positive");
    }
  }
};

namespace detail {

template <typename Scalar>
Mat<Scalar> hidden_state(const Mat<Scalar>& g, const HopfieldParams<Scalar>& hp) {
  hp.validate();
  if (g.cols() != hp.dim()) throw ShapeError("hopfield: token width does not match memories");
  if (!all_finite(g)) throw InvalidInput("hopfield: non-finite tokens");
  return g * hp.xi.transpose();
}

}  // namespace detail

/// E_hn = -1/2 sum_{B,mu} r(<xi_mu, g_B>)^2 (log-sum-exp form for Softmax).
template <typename Scalar>
Scalar hopfield_energy(const Mat<Scalar>& g, const HopfieldParams<Scalar>& hp) {
  const Mat<Scalar> hidden = detail::hidden_state(g, hp);
  return std::visit(
      [&](const auto& act) -> Scalar {
        using A = std::decay_t<decltype(act)>;
        if constexpr (std::is_same_v<A, Relu>) {
          return Scalar(-0.5) * hidden.array().max(Scalar(0)).square().sum();
        } else if constexpr (std::is_same_v<A, Power>) {
          return Scalar(-0.5) * hidden.array().max(Scalar(0)).pow(Scalar(2 * act.order)).sum();
        } else {
          const Scalar b = Scalar(act.beta);
          Scalar energy = 0;
          for (Index row = 0; row < hidden.rows(); ++row) {
            const Scalar peak = b * hidden.row(row).maxCoeff();
            energy -= (peak + std::log((b * hidden.row(row).array() - peak).exp().sum())) / b;
          }
          return energy;
        }
      },
      hp.activation);
}

/// -dE_hn/dg = f(g xi^T) xi with f the derivative of the per-unit energy.
template <typename Scalar>
Mat<Scalar> hopfield_grad(const Mat<Scalar>& g, const HopfieldParams<Scalar>& hp) {
  const Mat<Scalar> hidden = detail::hidden_state(g, hp);
  Mat<Scalar> drive = std::visit(
      [&](const auto& act) -> Mat<Scalar> {
        using A = std::decay_t<decltype(act)>;
        if constexpr (std::is_same_v<A, Relu>) {
          return hidden.array().max(Scalar(0)).matrix();
        } else if constexpr (std::is_same_v<A, Power>) {
          return (Scalar(act.order) *
                  hidden.array().max(Scalar(0)).pow(Scalar(2 * act.order - 1)))
              .matrix();
        } else {
          const Scalar b = Scalar(act.beta);
          Mat<Scalar> probs(hidden.rows(), hidden.cols());
          for (Index row = 0; row < hidden.rows(); ++row) {
            const Scalar peak = b * hidden.row(row).maxCoeff();
            probs.row(row) = (b * hidden.row(row).array() - peak).exp().matrix();
            probs.row(row) /= probs.row(row).sum();
          }
          return probs;
        }
      },
      hp.activation);
  return drive * hp.xi;
}

}  // namespace et
