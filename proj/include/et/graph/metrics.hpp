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

#include "et/common.hpp"

namespace et::graph {

/// Unweighted mean of the F1 scores of both classes, predicting 1 when
/// score >= threshold. Throws MetricUndefined unless both classes occur.
double macro_f1(const std::vector<double>& scores, const std::vector<int>& labels, double threshold = 0.5);

/// Area under the ROC curve from the rank-sum statistic, ties at midranks.
/// Throws MetricUndefined unless both classes occur.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

template <typename T>
std::vector<T> select(const std::vector<T>& values, const std::vector<Index>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (Index i : idx) out.push_back(values.at(static_cast<std::size_t>(i)));
  return out;
}

}  // namespace et::graph
