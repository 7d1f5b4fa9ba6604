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

#include "et/common.hpp"

namespace et {

/// Layer norm with a scalar scale and a per-coordinate bias. It is the
/// gradient of the convex Lagrangian below, which is what makes the token
/// dynamics descend the energy (its Jacobian is PSD whenever gamma >= 0).
template <typename Scalar>
struct LayerNormParams {
  Scalar gamma = Scalar(1);
  Vec<Scalar> delta;
  Scalar epsilon = Scalar(1e-5);

  Index dim() const { return delta.size(); }

  void validate() const {
    if (!std::isfinite(static_cast<double>(gamma)) || !all_finite(delta)) {
      throw InvalidInput("layer norm: gamma and delta must be finite");
    }
    if (!(epsilon >= Scalar(0))) {
      throw InvalidInput("layer norm: epsilon must be non-negative");
    }
  }

  static LayerNormParams identity(Index dim, Scalar epsilon = Scalar(1e-5)) {
    return {Scalar(1), Vec<Scalar>::Zero(dim), epsilon};
  }
};

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& x, const char* what) {
  if (!all_finite(x)) throw InvalidInput(std::string(what) + ": non-finite input");
}

}  // namespace detail

/// g_i = gamma * (x_i - mean) / sqrt(var + eps) + delta_i for one token.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Vec<Scalar> layer_norm(const Eigen::MatrixBase<Derived>& x, const LayerNormParams<Scalar>& p) {
  detail::require_finite(x, "layer_norm");
  if (x.size() != p.dim()) throw ShapeError("layer_norm: token width does not match delta");
  const Vec<Scalar> centered = x.derived().reshaped().array() - x.mean();
  const Scalar scale = std::sqrt(centered.squaredNorm() / Scalar(x.size()) + p.epsilon);
  return p.gamma * centered / scale + p.delta;
}

/// Row-wise layer norm over an N x D token matrix.
template <typename Scalar>
Mat<Scalar> layer_norm_rows(const Mat<Scalar>& x, const LayerNormParams<Scalar>& p) {
  detail::require_finite(x, "layer_norm");
  if (x.cols() != p.dim()) throw ShapeError("layer_norm: token width does not match delta");
  const Scalar d = Scalar(x.cols());
  Mat<Scalar> g(x.rows(), x.cols());
  for (Index a = 0; a < x.rows(); ++a) {
    const RowVec<Scalar> centered = x.row(a).array() - x.row(a).mean();
    const Scalar scale = std::sqrt(centered.squaredNorm() / d + p.epsilon);
    g.row(a) = p.gamma * centered / scale + p.delta.transpose();
  }
  return g;
}

/// L = D * gamma * sqrt(var + eps) + <delta, x>; its gradient is layer_norm(x).
template <typename Derived, typename Scalar = typename Derived::Scalar>
Scalar lagrangian(const Eigen::MatrixBase<Derived>& x, const LayerNormParams<Scalar>& p) {
  detail::require_finite(x, "lagrangian");
  if (x.size() != p.dim()) throw ShapeError("lagrangian: token width does not match delta");
  const Scalar d = Scalar(x.size());
  const Vec<Scalar> flat = x.derived().reshaped();
  const Scalar var = (flat.array() - flat.mean()).square().sum() / d;
  return d * p.gamma * std::sqrt(var + p.epsilon) + p.delta.dot(flat);
}

/// dg/dx for one token, equal to the Hessian of the Lagrangian:
///   gamma/s * (I - 11^T/D) - gamma/(D s^3) * c c^T,  c = x - mean, s = sqrt(var + eps).
template <typename Derived, typename Scalar = typename Derived::Scalar>
Mat<Scalar> layer_norm_jacobian(const Eigen::MatrixBase<Derived>& x,
                                const LayerNormParams<Scalar>& p) {
  detail::require_finite(x, "layer_norm_jacobian");
  const Index dim = x.size();
  const Scalar d = Scalar(dim);
  const Vec<Scalar> c = x.derived().reshaped().array() - x.mean();
  const Scalar s = std::sqrt(c.squaredNorm() / d + p.epsilon);
  Mat<Scalar> j = Mat<Scalar>::Identity(dim, dim);
  j.array() -= Scalar(1) / d;
  j *= p.gamma / s;
  j.noalias() -= (p.gamma / (d * s * s * s)) * c * c.transpose();
  return j;
}

}  // namespace et
