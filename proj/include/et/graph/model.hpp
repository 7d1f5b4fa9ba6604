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

#include "et/ad/et_ops.hpp"
#include "et/ad/tensor_view.hpp"
#include "et/core/dynamics.hpp"
#include "et/graph/graph.hpp"
#include "et/io/checkpoint.hpp"
#include "et/io/rng.hpp"

namespace et::graph {

struct GraphModelConfig {
  Index feature_dim = 8;
  Index token_dim = 32;
  Index heads = 2;
  Index head_dim = 32;
  Index memories = 64;
  Index hidden = 0;  // head width; 0 means token_dim
  double beta = 0.0;  // 0 means 1/sqrt(head_dim)
  bool beta_learnable = true;
  double alpha = 1.0;
  int steps = 2;
  double epsilon = 1e-5;
  bool self_loops = false;
  bool enable_attn = true;
  bool enable_hopfield = true;
  Activation activation = Relu{};

  Index head_width() const { return hidden > 0 ? hidden : token_dim; }
  double initial_beta() const;
  void validate() const;
};

struct GraphTaskParams {
  GraphModelConfig config;
  Matrix embed;      // F x D
  Matrix pos_embed;  // N x D
  EtParams<double> et;
  Matrix head_kernel1;     // 2D x hidden
  RowVector head_bias1;    // hidden
  Matrix head_kernel2;     // hidden x 1
  double head_bias2 = 0;
};

/// Embedding and head kernels N(0, 1/fan_in); attention and memory rows
/// N(0, 1/D); positional embeddings N(0, 0.02); zero biases. The attention
/// mask is the graph neighborhood, with isolated nodes given a self-loop.
GraphTaskParams init_graph_params(const GraphModelConfig& config, const GraphInstance& g, io::Rng& rng);

GraphTaskParams zeros_like(const GraphTaskParams& p);

std::vector<ad::TensorView> tensor_views(GraphTaskParams& p);
std::vector<ad::ConstTensorView> tensor_views(const GraphTaskParams& p);

io::Checkpoint to_checkpoint(const GraphTaskParams& p);
GraphTaskParams from_checkpoint(const GraphModelConfig& config, const GraphInstance& g, const io::Checkpoint& ckpt);

/// Row A = y_A E + lambda_A.
Matrix embed_nodes(const GraphInstance& g, const GraphTaskParams& p);

/// Pre-sigmoid scores, one per node.
Vector graph_logits(const GraphInstance& g, const GraphTaskParams& p);
/// Anomaly probabilities in (0, 1).
std::vector<double> graph_forward(const GraphInstance& g, const GraphTaskParams& p);

/// Ratio of regular to anomalous labels among `idx`. Throws InvalidInput when there is no anomaly.
double positive_weight(const std::vector<int>& labels, const std::vector<Index>& idx);

/// -sum over idx of [sigma l log p + (1 - l) log(1 - p)], evaluated from
/// logits as softplus terms so that it stays finite for saturated p.
double weighted_bce_logits(const Vector& logits, const std::vector<int>& labels, const std::vector<Index>& idx);
/// Same loss from probabilities.
double weighted_bce(const std::vector<double>& probs, const std::vector<int>& labels, const std::vector<Index>& idx);

// Tape form.

struct GraphTapeVars {
  ad::Var embed, pos_embed, head_kernel1, head_bias1, head_kernel2, head_bias2;
  ad::EtVars et;
};

GraphTapeVars bind_graph(ad::Tape& tape, const GraphTaskParams& p);
void collect_graph_grads(const ad::Gradients& grads, const GraphTapeVars& vars, GraphTaskParams& out);

/// Node features may be a leaf (for input gradients) or a constant.
ad::Var record_graph_logits(ad::Var features, const GraphTapeVars& vars, const GraphTaskParams& p);
ad::Var record_weighted_bce(ad::Var logits, const std::vector<int>& labels, const std::vector<Index>& idx);

struct GraphLossAndGrad {
  double loss = 0;
  GraphTaskParams grad;
};

GraphLossAndGrad graph_loss_and_grad(const GraphInstance& g, const GraphTaskParams& p, const std::vector<Index>& idx);

/// Loss by direct evaluation (no tape).
double graph_loss(const GraphInstance& g, const GraphTaskParams& p, const std::vector<Index>& idx);

}  // namespace et::graph
