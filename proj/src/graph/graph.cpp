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

#include "et/graph/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "et/io/format.hpp"
#include "et/io/image.hpp"
#include "et/io/rng.hpp"

namespace et::graph {

void GraphInstance::validate() const {
  if (!adjacency) throw InvalidInput("graph: missing adjacency");
  if (adjacency->size() != n_nodes()) throw ShapeError("graph: adjacency and features disagree on node count");
  if (static_cast<Index>(labels.size()) != n_nodes()) throw ShapeError("graph: need one label per node");
  for (int l : labels) {
    if (l != 0 && l != 1) throw InvalidInput("graph: labels must be 0 or 1");
  }
  for (const auto& row : adjacency->neighbors) {
    for (Index b : row) {
      if (b < 0 || b >= n_nodes()) throw InvalidInput("graph: neighbor index out of range");
    }
  }
  if (!adjacency->is_symmetric()) throw InvalidInput("graph: adjacency must be symmetric");
  if (!all_finite(features)) throw InvalidInput("graph: non-finite feature");
}

std::shared_ptr<const Adjacency> adjacency_from_edges(Index n_nodes,
                                                      const std::vector<std::pair<Index, Index>>& edges) {
  auto adj = std::make_shared<Adjacency>();
  adj->neighbors.resize(static_cast<std::size_t>(n_nodes));
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n_nodes || b >= n_nodes) {
      throw InvalidInput("graph: edge (" + std::to_string(a) + ", " + std::to_string(b) + ") outside 0.." +
                         std::to_string(n_nodes - 1));
    }
    adj->neighbors[std::size_t(a)].push_back(b);
    if (a != b) adj->neighbors[std::size_t(b)].push_back(a);
  }
  for (auto& row : adj->neighbors) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return adj;
}

namespace {

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    out.push_back(line);
  }
  return out;
}

template <typename T>
T parse_number(std::string_view s, const char* what, std::size_t line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  T value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw FormatError(std::string(what) + ": cannot parse '" + std::string(s) + "' on data line " +
                      std::to_string(line + 1));
  }
  return value;
}

}  // namespace

std::vector<std::pair<Index, Index>> parse_edges(std::string_view text) {
  std::vector<std::pair<Index, Index>> edges;
  const auto lines = lines_of(text);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto tab = lines[k].find('\t');
    if (tab == std::string::npos) throw FormatError("edges: expected 'src<TAB>dst' on data line " + std::to_string(k + 1));
    const std::string_view line = lines[k];
    const Index a = parse_number<Index>(line.substr(0, tab), "edges", k);
    const Index b = parse_number<Index>(line.substr(tab + 1), "edges", k);
    if (a < 0 || b < 0) throw FormatError("edges: negative node id on data line " + std::to_string(k + 1));
    edges.emplace_back(a, b);
  }
  return edges;
}

Matrix parse_features_csv(std::string_view text) {
  const auto lines = lines_of(text);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    std::vector<double> row;
    std::string_view rest = lines[k];
    while (true) {
      const auto comma = rest.find(',');
      row.push_back(parse_number<double>(rest.substr(0, comma), "features", k));
      if (!std::isfinite(row.back())) {
        throw FormatError("features: non-finite value on data line " + std::to_string(k + 1));
      }
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("features: data line " + std::to_string(k + 1) + " has " + std::to_string(row.size()) +
                        " columns, expected " + std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("features: no rows");
  Matrix out(Index(rows.size()), Index(rows.front().size()));
  for (Index r = 0; r < out.rows(); ++r) {
    for (Index c = 0; c < out.cols(); ++c) out(r, c) = rows[std::size_t(r)][std::size_t(c)];
  }
  return out;
}

std::vector<int> parse_labels(std::string_view text) {
  std::vector<int> out;
  const auto lines = lines_of(text);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    out.push_back(parse_number<int>(lines[k], "labels", k));
    if (out.back() != 0 && out.back() != 1) {
      throw FormatError("labels: expected 0 or 1 on data line " + std::to_string(k + 1));
    }
  }
  return out;
}

GraphInstance load_graph(const std::filesystem::path& edges, const std::filesystem::path& features,
                         const std::filesystem::path& labels) {
  GraphInstance g;
  g.features = parse_features_csv(io::read_file(features));
  g.labels = parse_labels(io::read_file(labels));
  g.adjacency = adjacency_from_edges(g.n_nodes(), parse_edges(io::read_file(edges)));
  g.validate();
  return g;
}

void save_graph(const GraphInstance& g, const std::filesystem::path& dir) {
  std::string edges, features, labels;
  for (Index a = 0; a < g.n_nodes(); ++a) {
    for (Index b : g.adjacency->neighbors[std::size_t(a)]) {
      if (b >= a) edges += std::to_string(a) + "\t" + std::to_string(b) + "\n";
    }
    for (Index c = 0; c < g.feature_dim(); ++c) {
      features += (c ? "," : "") + io::format_double(g.features(a, c));
    }
    features += "\n";
    labels += std::to_string(g.labels[std::size_t(a)]) + "\n";
  }
  io::write_file(dir / "edges.tsv", edges);
  io::write_file(dir / "features.csv", features);
  io::write_file(dir / "labels.txt", labels);
}

GraphInstance gen_planted_anomaly_graph(std::uint64_t seed, Index n_nodes, double anomaly_rate, double shift,
                                        const PlantedGraphSpec& spec) {
  if (!(anomaly_rate > 0 && anomaly_rate < 0.5)) throw InvalidInput("planted graph: anomaly_rate must be in (0, 0.5)");
  if (spec.communities < 2 || spec.feature_dim < 1 || n_nodes < 2 * spec.communities) {
    throw InvalidInput("planted graph: need >= 2 communities, a feature and >= 2 nodes per community");
  }
  if (!(spec.degree_in >= 0) || !(spec.degree_out >= 0)) throw InvalidInput("planted graph: degrees must be >= 0");
  if (spec.feature_dim < 30 && (Index{1} << spec.feature_dim) < spec.communities) {
    throw InvalidInput("planted graph: feature_dim too small for distinct community means");
  }
  io::Rng rng = io::Rng::for_purpose(seed, "graph");
  const int k = spec.communities;

  std::vector<int> community(static_cast<std::size_t>(n_nodes));
  for (Index a = 0; a < n_nodes; ++a) community[std::size_t(a)] = int(a % k);
  rng.shuffle(community);

  // Each community mean is shift times a distinct random sign pattern, so
  // every feature is offset by exactly shift noise standard deviations.
  Matrix means(k, spec.feature_dim);
  for (int c = 0; c < k; ++c) {
    bool distinct = false;
    while (!distinct) {
      for (Index j = 0; j < spec.feature_dim; ++j) means(c, j) = rng.uniform() < 0.5 ? -shift : shift;
      distinct = true;
      for (int o = 0; o < c && distinct; ++o) distinct = shift == 0 || means.row(o) != means.row(c);
    }
  }

  const double size = double(n_nodes) / k;
  const double p_in = std::min(1.0, spec.degree_in / std::max(1.0, size - 1));
  const double p_out = std::min(1.0, spec.degree_out / std::max(1.0, double(n_nodes) - size));
  std::vector<std::pair<Index, Index>> edges;
  for (Index a = 0; a < n_nodes; ++a) {
    for (Index b = a + 1; b < n_nodes; ++b) {
      const double p = community[std::size_t(a)] == community[std::size_t(b)] ? p_in : p_out;
      if (rng.uniform() < p) edges.emplace_back(a, b);
    }
  }

  const Index n_anomalies = std::max<Index>(1, Index(std::llround(anomaly_rate * double(n_nodes))));
  std::vector<Index> order(static_cast<std::size_t>(n_nodes));
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(order);

  GraphInstance g;
  g.labels.assign(std::size_t(n_nodes), 0);
  std::vector<int> source = community;
  for (Index i = 0; i < n_anomalies; ++i) {
    const Index a = order[std::size_t(i)];
    g.labels[std::size_t(a)] = 1;
    const int other = int(rng.index(k - 1));
    source[std::size_t(a)] = other >= community[std::size_t(a)] ? other + 1 : other;
  }
  g.features = rng.normal_matrix(n_nodes, spec.feature_dim, 1.0);
  for (Index a = 0; a < n_nodes; ++a) g.features.row(a) += means.row(source[std::size_t(a)]);
  g.adjacency = adjacency_from_edges(n_nodes, edges);
  g.validate();
  return g;
}

SplitPlan make_split(const std::vector<int>& labels, double train_ratio, std::uint64_t seed) {
  if (!(train_ratio > 0 && train_ratio < 1)) throw ConfigError("split: train_ratio must be in (0, 1)");
  io::Rng rng = io::Rng::for_purpose(seed, "split");
  SplitPlan plan;
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<Index> members;
    for (std::size_t a = 0; a < labels.size(); ++a) {
      if (labels[a] == cls) members.push_back(Index(a));
    }
    rng.shuffle(members);
    const auto n = members.size();
    const auto n_train = std::min(n, static_cast<std::size_t>(std::llround(train_ratio * double(n))));
    const auto n_valid = static_cast<std::size_t>(std::llround(double(n - n_train) / 3.0));
    plan.train.insert(plan.train.end(), members.begin(), members.begin() + std::ptrdiff_t(n_train));
    plan.valid.insert(plan.valid.end(), members.begin() + std::ptrdiff_t(n_train),
                      members.begin() + std::ptrdiff_t(n_train + n_valid));
    plan.test.insert(plan.test.end(), members.begin() + std::ptrdiff_t(n_train + n_valid), members.end());
  }
  std::sort(plan.train.begin(), plan.train.end());
  std::sort(plan.valid.begin(), plan.valid.end());
  std::sort(plan.test.begin(), plan.test.end());
  return plan;
}

std::vector<Index> isolated_nodes(const Adjacency& adjacency) {
  std::vector<Index> out;
  for (Index a = 0; a < adjacency.size(); ++a) {
    if (adjacency.neighbors[std::size_t(a)].empty()) out.push_back(a);
  }
  return out;
}

std::shared_ptr<const Adjacency> with_forced_self_loops(const Adjacency& adjacency) {
  auto out = std::make_shared<Adjacency>(adjacency);
  for (Index a : isolated_nodes(adjacency)) out->neighbors[std::size_t(a)].push_back(a);
  return out;
}

}  // namespace et::graph
