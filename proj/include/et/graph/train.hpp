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
#include <functional>
#include <string>
#include <vector>

#include "et/ad/adam.hpp"
#include "et/graph/model.hpp"

namespace et::graph {

struct GraphTrainConfig {
  ad::AdamConfig adam{.lr = 1e-3, .b1 = 0.9, .b2 = 0.99, .eps = 1e-8, .weight_decay = 0.0, .grad_clip = 0.0};
  int epochs = 100;
  double train_ratio = 0.40;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitMetrics {
  double macro_f1 = 0;
  double auc = 0;
};

struct GraphEpochRecord {
  int epoch = 0;  // 0 is the initialization
  double loss = 0;
  SplitMetrics valid;
};

struct GraphTrainResult {
  GraphTaskParams params;  // best validation macro-F1
  int best_epoch = 0;
  std::vector<GraphEpochRecord> history;
  SplitMetrics valid;
  SplitMetrics test;
};

SplitMetrics evaluate_split(const std::vector<double>& probs, const std::vector<int>& labels,
                            const std::vector<Index>& idx);

/// Full-batch training on split.train. Keeps the parameters with the best
/// validation macro-F1 (ties go to the higher validation AUC, then the
/// earlier epoch) and reports them on the test split.
GraphTrainResult train_graph(const GraphInstance& g, const SplitPlan& split, const GraphModelConfig& model,
                             const GraphTrainConfig& config,
                             const std::function<void(const GraphEpochRecord&)>& on_epoch = {});

struct SeedReport {
  std::uint64_t seed = 0;
  int best_epoch = 0;
  SplitMetrics valid;
  SplitMetrics test;
};

struct MultiSeedReport {
  std::vector<SeedReport> runs;
  SplitMetrics valid_mean, valid_std, test_mean, test_std;  // sample std
};

/// One split and initialization per seed (seed, seed + 1, ...), run in parallel.
/// The first run's full result is returned through `first` when given.
MultiSeedReport run_graph_seeds(const GraphInstance& g, const GraphModelConfig& model, const GraphTrainConfig& config,
                                int n_seeds, GraphTrainResult* first = nullptr);

/// `seed,split,macro_f1,auc` rows for every run, then mean and std rows.
std::string metrics_csv(const MultiSeedReport& report);
/// `epoch,loss,val_macro_f1,val_auc`.
std::string history_csv(const std::vector<GraphEpochRecord>& history);

}  // namespace et::graph
