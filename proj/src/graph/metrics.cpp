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

#include "et/graph/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace et::graph {

namespace {

void check_binary(const std::vector<double>& scores, const std::vector<int>& labels, const char* what) {
  if (scores.size() != labels.size()) throw ShapeError(std::string(what) + ": scores and labels differ in length");
  bool pos = false, neg = false;
  for (int l : labels) {
    if (l == 1) pos = true;
    else if (l == 0) neg = true;
    else throw InvalidInput(std::string(what) + ": labels must be 0 or 1");
  }
  if (!pos || !neg) throw MetricUndefined(std::string(what) + ": needs both classes present");
}

}  // namespace

double macro_f1(const std::vector<double>& scores, const std::vector<int>& labels, double threshold) {
  check_binary(scores, labels, "macro_f1");
  double f1_sum = 0;
  for (int cls = 0; cls <= 1; ++cls) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const int pred = scores[i] >= threshold ? 1 : 0;
      if (pred == cls && labels[i] == cls) tp += 1;
      else if (pred == cls) fp += 1;
      else if (labels[i] == cls) fn += 1;
    }
    f1_sum += 2 * tp / (2 * tp + fp + fn);
  }
  return f1_sum / 2;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_binary(scores, labels, "auc");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0;
  double n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * double(i + 1 + j);  // mean of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum += midrank;
        n_pos += 1;
      }
    }
    i = j;
  }
  const double n_neg = double(scores.size()) - n_pos;
  return (rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg);
}

}  // namespace et::graph
