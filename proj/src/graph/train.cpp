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

#include "et/graph/train.hpp"

#include <algorithm>
#include <cmath>

#include "et/graph/metrics.hpp"
#include "et/io/format.hpp"
#include "et/parallel.hpp"

namespace et::graph {

namespace {

// Keeps a learnable inverse temperature strictly positive.
constexpr double kMinBeta = 1e-3;

}  // namespace

void GraphTrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("graph training: epochs must be >= 0");
  if (!(train_ratio > 0 && train_ratio < 1)) throw ConfigError("graph training: train_ratio must be in (0, 1)");
  if (!(adam.lr >= 0) || !(adam.b1 >= 0 && adam.b1 < 1) || !(adam.b2 >= 0 && adam.b2 < 1) ||
      !(adam.weight_decay >= 0) || !(adam.eps > 0)) {
    throw ConfigError("graph training: invalid optimizer settings");
  }
}

SplitMetrics evaluate_split(const std::vector<double>& probs, const std::vector<int>& labels,
                            const std::vector<Index>& idx) {
  const auto p = select(probs, idx);
  const auto l = select(labels, idx);
  return {macro_f1(p, l), auc(p, l)};
}

GraphTrainResult train_graph(const GraphInstance& g, const SplitPlan& split, const GraphModelConfig& model,
                             const GraphTrainConfig& config,
                             const std::function<void(const GraphEpochRecord&)>& on_epoch) {
  config.validate();
  g.validate();
  if (split.train.empty() || split.valid.empty() || split.test.empty()) {
    throw ConfigError("graph training: every split needs nodes");
  }
  positive_weight(g.labels, split.train);

  io::Rng init_rng = io::Rng::for_purpose(config.seed, "init");
  GraphTaskParams params = init_graph_params(model, g, init_rng);
  ad::AdamState adam;
  adam.config = config.adam;

  GraphTrainResult result;
  auto consider = [&](int epoch, double loss) {
    const GraphEpochRecord rec{epoch, loss, evaluate_split(graph_forward(g, params), g.labels, split.valid)};
    result.history.push_back(rec);
    const bool better = epoch == 0 || rec.valid.macro_f1 > result.valid.macro_f1 ||
                        (rec.valid.macro_f1 == result.valid.macro_f1 && rec.valid.auc > result.valid.auc);
    if (better) {
      result.params = params;
      result.best_epoch = epoch;
      result.valid = rec.valid;
    }
    if (on_epoch) on_epoch(rec);
  };

  consider(0, graph_loss(g, params, split.train));
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const GraphLossAndGrad lg = graph_loss_and_grad(g, params, split.train);
    if (!std::isfinite(lg.loss)) {
      throw DivergenceError("graph training: non-finite loss at epoch " + std::to_string(epoch));
    }
    ad::adam_step(tensor_views(params), tensor_views(lg.grad), adam);
    params.et.attn.beta = std::max(params.et.attn.beta, kMinBeta);
    consider(epoch, graph_loss(g, params, split.train));
  }
  result.test = evaluate_split(graph_forward(g, result.params), g.labels, split.test);
  return result;
}

namespace {

void mean_std(const std::vector<SplitMetrics>& xs, SplitMetrics& mean, SplitMetrics& sd) {
  const double n = double(xs.size());
  mean = {};
  for (const auto& x : xs) {
    mean.macro_f1 += x.macro_f1 / n;
    mean.auc += x.auc / n;
  }
  sd = {};
  if (xs.size() < 2) return;
  for (const auto& x : xs) {
    sd.macro_f1 += (x.macro_f1 - mean.macro_f1) * (x.macro_f1 - mean.macro_f1);
    sd.auc += (x.auc - mean.auc) * (x.auc - mean.auc);
  }
  sd.macro_f1 = std::sqrt(sd.macro_f1 / (n - 1));
  sd.auc = std::sqrt(sd.auc / (n - 1));
}

}  // namespace

MultiSeedReport run_graph_seeds(const GraphInstance& g, const GraphModelConfig& model, const GraphTrainConfig& config,
                                int n_seeds, GraphTrainResult* first) {
  if (n_seeds < 1) throw ConfigError("graph training: need at least one seed");
  std::vector<GraphTrainResult> results(static_cast<std::size_t>(n_seeds));
  parallel_for(results.size(), [&](std::size_t k) {
    GraphTrainConfig c = config;
    c.seed = config.seed + k;
    results[k] = train_graph(g, make_split(g.labels, c.train_ratio, c.seed), model, c);
  });
  MultiSeedReport report;
  std::vector<SplitMetrics> valid, test;
  for (std::size_t k = 0; k < results.size(); ++k) {
    report.runs.push_back({config.seed + k, results[k].best_epoch, results[k].valid, results[k].test});
    valid.push_back(results[k].valid);
    test.push_back(results[k].test);
  }
  mean_std(valid, report.valid_mean, report.valid_std);
  mean_std(test, report.test_mean, report.test_std);
  if (first) *first = std::move(results.front());
  return report;
}

std::string metrics_csv(const MultiSeedReport& report) {
  using io::format_double;
  std::string out = "seed,split,macro_f1,auc\n";
  auto row = [&](const std::string& seed, const char* split, const SplitMetrics& m) {
    out += seed + "," + split + "," + format_double(m.macro_f1) + "," + format_double(m.auc) + "\n";
  };
  for (const auto& r : report.runs) {
    row(std::to_string(r.seed), "valid", r.valid);
    row(std::to_string(r.seed), "test", r.test);
  }
  row("mean", "valid", report.valid_mean);
  row("mean", "test", report.test_mean);
  row("std", "valid", report.valid_std);
  row("std", "test", report.test_std);
  return out;
}

std::string history_csv(const std::vector<GraphEpochRecord>& history) {
  using io::format_double;
  std::string out = "epoch,loss,val_macro_f1,val_auc\n";
  for (const auto& h : history) {
    out += std::to_string(h.epoch) + "," + format_double(h.loss) + "," + format_double(h.valid.macro_f1) + "," +
           format_double(h.valid.auc) + "\n";
  }
  return out;
}

}  // namespace et::graph
