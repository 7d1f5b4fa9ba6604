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
#include <filesystem>
#include <memory>
#include <vector>

#include "et/core/attention.hpp"

namespace et::graph {

/// Undirected attributed graph with binary node labels (1 = anomaly).
struct GraphInstance {
  std::shared_ptr<const Adjacency> adjacency;  // sorted, duplicate-free neighbor lists
  Matrix features;                             // N x F
  std::vector<int> labels;                     // N entries in {0, 1}

  Index n_nodes() const { return features.rows(); }
  Index feature_dim() const { return features.cols(); }
  /// Symmetric, in range, one label per node, labels binary, features finite.
  void validate() const;
};

/// Symmetric adjacency from an undirected edge list. Duplicate edges are
/// dropped; self-edges are kept as self-loops.
std::shared_ptr<const Adjacency> adjacency_from_edges(Index n_nodes,
                                                      const std::vector<std::pair<Index, Index>>& edges);

/// Text formats: edges as `src<TAB>dst` lines (0-indexed, undirected),
/// features as CSV with one row per node, labels as one integer per line.
std::vector<std::pair<Index, Index>> parse_edges(std::string_view text);
Matrix parse_features_csv(std::string_view text);
std::vector<int> parse_labels(std::string_view text);

/// Node count comes from the feature rows; edges and labels must agree with it.
GraphInstance load_graph(const std::filesystem::path& edges, const std::filesystem::path& features,
                         const std::filesystem::path& labels);
/// Writes edges.tsv, features.csv and labels.txt into `dir`.
void save_graph(const GraphInstance& g, const std::filesystem::path& dir);

struct PlantedGraphSpec {
  int communities = 4;
  int feature_dim = 8;
  double degree_in = 8.0;   // expected neighbors inside the own community
  double degree_out = 1.0;  // expected neighbors elsewhere
};

/// Stochastic block model with Gaussian node features N(shift * s_k, I),
/// s_k a distinct random sign vector per community. round(anomaly_rate * n) nodes
/// draw their features from a different community than their own, so they
/// stand out only against their neighbors.
GraphInstance gen_planted_anomaly_graph(std::uint64_t seed, Index n_nodes, double anomaly_rate, double shift,
                                        const PlantedGraphSpec& spec = {});

struct SplitPlan {
  std::vector<Index> train;
  std::vector<Index> valid;
  std::vector<Index> test;
};

/// Stratified random split: train_ratio of each class goes to training and
/// the rest is divided 1:2 into validation and test. Index lists are sorted.
SplitPlan make_split(const std::vector<int>& labels, double train_ratio, std::uint64_t seed);

/// Nodes without any neighbor. Graph attention needs each of them to get a self-loop.
std::vector<Index> isolated_nodes(const Adjacency& adjacency);

/// Copy of `adjacency` where every isolated node is its own neighbor.
std::shared_ptr<const Adjacency> with_forced_self_loops(const Adjacency& adjacency);

}  // namespace et::graph
