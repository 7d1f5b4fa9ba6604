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

#include "et/ad/finite_diff.hpp"

#include <algorithm>

namespace et::ad {

Matrix finite_diff(const std::function<double(const Matrix&)>& f, const Matrix& point, double h) {
  if (!(h > 0)) throw InvalidInput("finite_diff: step must be positive");
  Matrix grad(point.rows(), point.cols());
  Matrix probe = point;
  for (Index k = 0; k < point.size(); ++k) {
    const double saved = probe.data()[k];
    probe.data()[k] = saved + h;
    const double up = f(probe);
    probe.data()[k] = saved - h;
    const double down = f(probe);
    probe.data()[k] = saved;
    grad.data()[k] = (up - down) / (2 * h);
  }
  return grad;
}

double relative_error(const Matrix& analytic, const Matrix& reference) {
  if (analytic.rows() != reference.rows() || analytic.cols() != reference.cols()) {
    throw ShapeError("relative_error: shapes differ");
  }
  if (analytic.size() == 0) return 0.0;
  const double scale = std::max(analytic.cwiseAbs().maxCoeff(), reference.cwiseAbs().maxCoeff());
  const double diff = (analytic - reference).cwiseAbs().maxCoeff();
  if (scale == 0.0) return diff;
  return diff / scale;
}

}  // namespace et::ad
