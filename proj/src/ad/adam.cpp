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

#include "et/ad/adam.hpp"

#include <cmath>

namespace et::ad {

AdamReport adam_step(const std::vector<TensorView>& params, const std::vector<ConstTensorView>& grads,
                     AdamState& state) {
  if (params.size() != grads.size()) throw ShapeError("adam: parameter and gradient counts differ");
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.push_back(Eigen::ArrayXd::Zero(p.size()));
      state.second_moment.push_back(Eigen::ArrayXd::Zero(p.size()));
    }
  }
  if (state.first_moment.size() != params.size()) throw ShapeError("adam: state does not match parameters");

  double sq = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (grads[k].size() != params[k].size() || state.first_moment[k].size() != params[k].size()) {
      throw ShapeError("adam: shape mismatch for " + params[k].name);
    }
    const auto g = grads[k].array();
    if (!g.isFinite().all()) throw DivergenceError("adam: non-finite gradient for " + params[k].name);
    sq += g.square().sum();
  }

  const AdamConfig& c = state.config;
  AdamReport report;
  report.grad_norm = std::sqrt(sq);
  double factor = 1.0;
  if (c.grad_clip > 0 && report.grad_norm > c.grad_clip) factor = c.grad_clip / report.grad_norm;
  report.applied_norm = report.grad_norm * factor;

  state.step += 1;
  const double correct1 = 1.0 - std::pow(c.b1, double(state.step));
  const double correct2 = 1.0 - std::pow(c.b2, double(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Eigen::ArrayXd g = factor * grads[k].array();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    m = c.b1 * m + (1.0 - c.b1) * g;
    v = c.b2 * v + (1.0 - c.b2) * g.square();
    auto w = params[k].array();
    if (params[k].decay && c.weight_decay != 0.0) w -= c.lr * c.weight_decay * w;
    w -= c.lr * (m / correct1) / ((v / correct2).sqrt() + c.eps);
  }
  return report;
}

}  // namespace et::ad
