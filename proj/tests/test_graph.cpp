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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>

#include "et/ad/finite_diff.hpp"
#include "et/graph/graph.hpp"
#include "et/graph/metrics.hpp"
#include "et/graph/model.hpp"
#include "et/graph/train.hpp"
#include "et/io/image.hpp"

using namespace et;
using namespace et::graph;
namespace fs = std::filesystem;

namespace {

GraphInstance make_graph(Index n, const std::vector<std::pair<Index, Index>>& edges, Index f, std::uint64_t seed,
                         std::vector<int> labels = {}) {
  io::Rng rng(seed);
  GraphInstance g;
  g.adjacency = adjacency_from_edges(n, edges);
  g.features = rng.normal_matrix(n, f, 1.0);
  if (labels.empty()) {
    labels.assign(std::size_t(n), 0);
    labels[0] = 1;
  }
  g.labels = labels;
  return g;
}

GraphModelConfig small_config(Index f) {
  GraphModelConfig c;
  c.feature_dim = f;
  c.token_dim = 4;
  c.heads = 2;
  c.head_dim = 2;
  c.memories = 3;
  c.hidden = 3;
  c.steps = 2;
  c.alpha = 0.5;
  return c;
}

std::vector<std::pair<Index, Index>> path_edges(Index n) {
  std::vector<std::pair<Index, Index>> e;
  for (Index a = 0; a + 1 < n; ++a) e.emplace_back(a, a + 1);
  return e;
}

double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
    }
  }
  return wins / pairs;
}

Matrix relu(const Matrix& m) { return m.cwiseMax(0.0); }

}  // namespace

TEST_CASE("adjacency from edges") {
  const auto adj = adjacency_from_edges(4, {{0, 1}, {1, 0}, {2, 2}, {1, 3}, {0, 1}});
  CHECK(adj->neighbors[0] == std::vector<Index>{1});
  CHECK(adj->neighbors[1] == std::vector<Index>{0, 3});
  CHECK(adj->neighbors[2] == std::vector<Index>{2});
  CHECK(adj->neighbors[3] == std::vector<Index>{1});
  CHECK(adj->is_symmetric());
  CHECK_THROWS_AS(adjacency_from_edges(2, {{0, 2}}), InvalidInput);
  CHECK_THROWS_AS(adjacency_from_edges(2, {{-1, 0}}), InvalidInput);
}

TEST_CASE("isolated nodes get forced self-loops") {
  const auto adj = adjacency_from_edges(4, {{0, 1}});
  CHECK(isolated_nodes(*adj) == std::vector<Index>{2, 3});
  const auto fixed = with_forced_self_loops(*adj);
  CHECK(fixed->neighbors[2] == std::vector<Index>{2});
  CHECK(fixed->neighbors[0] == std::vector<Index>{1});
  CHECK(isolated_nodes(*fixed).empty());
  CHECK_THROWS_AS(AttentionPattern::build(4, GraphNeighborhood{adj, false}), DegenerateMask);

  auto g = make_graph(4, {{0, 1}}, 2, 3);
  io::Rng rng(1);
  const auto p = init_graph_params(small_config(2), g, rng);
  for (double v : graph_forward(g, p)) CHECK((v > 0 && v < 1));
}

TEST_CASE("embed_nodes") {
  auto g = make_graph(3, {{0, 1}, {1, 2}}, 2, 4);
  io::Rng rng(2);
  auto p = init_graph_params(small_config(2), g, rng);

  SUBCASE("zero features give the positional embeddings") {
    g.features.setZero();
    CHECK(embed_nodes(g, p) == p.pos_embed);
  }
  SUBCASE("identity embedding and zero positions give the features") {
    GraphModelConfig c = small_config(4);
    auto g4 = make_graph(3, {{0, 1}, {1, 2}}, 4, 4);
    io::Rng r(3);
    auto q = init_graph_params(c, g4, r);
    q.embed = Matrix::Identity(4, 4);
    q.pos_embed.setZero();
    CHECK(embed_nodes(g4, q) == g4.features);
  }
  SUBCASE("matches direct evaluation") {
    const Matrix x = embed_nodes(g, p);
    for (Index a = 0; a < 3; ++a) {
      for (Index j = 0; j < p.config.token_dim; ++j) {
        double v = p.pos_embed(a, j);
        for (Index f = 0; f < 2; ++f) v += g.features(a, f) * p.embed(f, j);
        CHECK(x(a, j) == doctest::Approx(v).epsilon(1e-14));
      }
    }
  }
  SUBCASE("shape mismatch") {
    auto wide = make_graph(3, {{0, 1}}, 3, 1);
    CHECK_THROWS_AS(embed_nodes(wide, p), ShapeError);
    CHECK_THROWS_AS(init_graph_params(small_config(2), wide, rng), ShapeError);
  }
}

TEST_CASE("two-node graph matches a hand evaluation") {
  auto g = make_graph(2, {{0, 1}}, 3, 5, {1, 0});
  GraphModelConfig c = small_config(3);
  c.steps = 2;
  c.alpha = 0.3;
  io::Rng rng(6);
  auto p = init_graph_params(c, g, rng);
  p.et.norm.gamma = 1.3;
  p.et.norm.delta << 0.1, -0.2, 0.05, 0.0;
  p.head_bias1 << 0.1, -0.1, 0.2;
  p.head_bias2 = -0.3;

  auto ln = [&](const RowVector& x) {
    const double mean = x.mean();
    const RowVector centered = x.array() - mean;
    const double var = centered.squaredNorm() / double(x.size());
    return RowVector((p.et.norm.gamma * centered.array() / std::sqrt(var + c.epsilon)).matrix() + p.et.norm.delta.transpose());
  };
  const Index y = c.head_dim;
  Matrix x(2, c.token_dim);
  for (Index a = 0; a < 2; ++a) x.row(a) = g.features.row(a) * p.embed + p.pos_embed.row(a);
  const Matrix x0 = x;
  for (int t = 0; t < c.steps; ++t) {
    Matrix gn(2, c.token_dim);
    for (Index a = 0; a < 2; ++a) gn.row(a) = ln(x.row(a));
    Matrix next = x;
    for (Index a = 0; a < 2; ++a) {
      const Index other = 1 - a;
      RowVector delta = RowVector::Zero(c.token_dim);
      for (Index h = 0; h < c.heads; ++h) {
        const Matrix wk = p.et.attn.w_key.middleRows(h * y, y);
        const Matrix wq = p.et.attn.w_query.middleRows(h * y, y);
        // A single neighbor gets softmax weight 1 in both directions.
        delta += (wq.transpose() * (wk * gn.row(other).transpose())).transpose();
        delta += (wk.transpose() * (wq * gn.row(other).transpose())).transpose();
      }
      const Matrix hidden = relu(p.et.hopfield.xi * gn.row(a).transpose());
      delta += (p.et.hopfield.xi.transpose() * hidden).transpose();
      next.row(a) = x.row(a) + c.alpha * delta;
    }
    x = next;
  }
  const Vector logits = graph_logits(g, p);
  for (Index a = 0; a < 2; ++a) {
    RowVector both(2 * c.token_dim);
    both << ln(x0.row(a)), ln(x.row(a));
    const RowVector hid = relu((both * p.head_kernel1 + p.head_bias1).eval());
    const double z = (hid * p.head_kernel2)(0, 0) + p.head_bias2;
    CHECK(logits(a) == doctest::Approx(z).epsilon(1e-12));
    CHECK(graph_forward(g, p)[std::size_t(a)] == doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-12));
  }
}

TEST_CASE("T=1 uses exactly one update and T=0 is rejected") {
  auto g = make_graph(3, {{0, 1}, {1, 2}}, 2, 7);
  GraphModelConfig c = small_config(2);
  c.steps = 1;
  io::Rng rng(8);
  const auto p = init_graph_params(c, g, rng);
  const Matrix x0 = embed_nodes(g, p);
  const Matrix x1 = et_step(x0, p.et, c.alpha);
  Matrix both(3, 2 * c.token_dim);
  both << layer_norm_rows(x0, p.et.norm), layer_norm_rows(x1, p.et.norm);
  const Vector z = (relu((both * p.head_kernel1).rowwise() + p.head_bias1) * p.head_kernel2).col(0).array() +
                   p.head_bias2;
  CHECK((graph_logits(g, p) - z).norm() < 1e-13);

  c.steps = 0;
  io::Rng r2(1);
  CHECK_THROWS_AS(init_graph_params(c, g, r2), ConfigError);
}

TEST_CASE("disconnected pair with self-loops attends only to itself") {
  auto g = make_graph(2, {}, 2, 9);
  GraphModelConfig c = small_config(2);
  c.self_loops = true;
  io::Rng rng(10);
  const auto p = init_graph_params(c, g, rng);
  const auto before = graph_forward(g, p);
  auto moved = g;
  moved.features.row(1).array() += 5.0;
  const auto after = graph_forward(moved, p);
  CHECK(after[0] == before[0]);
  CHECK(after[1] != before[1]);

  const auto pattern = AttentionPattern::build(2, p.et.attn.mask);
  CHECK(pattern.nnz() == 2);
  CHECK(pattern.key(pattern.row_begin(0)) == 0);
  CHECK(pattern.key(pattern.row_begin(1)) == 1);
}

TEST_CASE("graph loss gradients match finite differences") {
  io::Rng pick(11);
  for (int trial = 0; trial < 6; ++trial) {
    const Index n = 3 + pick.index(4);
    std::vector<std::pair<Index, Index>> edges = path_edges(n);
    edges.emplace_back(0, n - 1);
    std::vector<int> labels(std::size_t(n), 0);
    labels[1] = 1;
    auto g = make_graph(n, edges, 3, 100 + std::uint64_t(trial), labels);
    GraphModelConfig c = small_config(3);
    c.self_loops = trial % 2 == 1;
    c.steps = 1 + trial % 3;
    if (trial == 4) c.activation = Power{2};
    io::Rng rng(200 + std::uint64_t(trial));
    auto p = init_graph_params(c, g, rng);
    p.et.norm.gamma = 1.2;
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});

    const auto lg = graph_loss_and_grad(g, p, idx);
    CHECK(lg.loss == doctest::Approx(graph_loss(g, p, idx)).epsilon(1e-12));
    auto pv = tensor_views(p);
    const auto gv = tensor_views(std::as_const(lg.grad));
    for (std::size_t k = 0; k < pv.size(); ++k) {
      Eigen::Map<Matrix> slot(pv[k].data, pv[k].size(), 1);
      const Matrix at = slot;
      const Matrix fd = ad::finite_diff(
          [&](const Matrix& q) {
            slot = q;
            const double l = graph_loss(g, p, idx);
            slot = at;
            return l;
          },
          at, 1e-6);
      const Matrix analytic = Eigen::Map<const Matrix>(gv[k].data, gv[k].size(), 1);
      INFO("tensor " << pv[k].name << " trial " << trial);
      CHECK(ad::relative_error(analytic, fd) <= 1e-6);
    }
  }
}

TEST_CASE("fixed beta gets no gradient") {
  auto g = make_graph(3, {{0, 1}, {1, 2}}, 2, 12);
  GraphModelConfig c = small_config(2);
  c.beta_learnable = false;
  io::Rng rng(13);
  const auto p = init_graph_params(c, g, rng);
  CHECK(graph_loss_and_grad(g, p, {0, 1, 2}).grad.et.attn.beta == 0.0);
}

TEST_CASE("relabeling nodes permutes the outputs") {
  const Index n = 6;
  std::vector<std::pair<Index, Index>> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 3}, {1, 4}};
  auto g = make_graph(n, edges, 3, 14);
  io::Rng rng(15);
  const auto p = init_graph_params(small_config(3), g, rng);
  const std::vector<Index> perm{3, 0, 5, 1, 4, 2};  // old node a becomes perm[a]

  GraphInstance h;
  std::vector<std::pair<Index, Index>> moved;
  for (auto [a, b] : edges) moved.emplace_back(perm[std::size_t(a)], perm[std::size_t(b)]);
  h.adjacency = adjacency_from_edges(n, moved);
  h.features.resize(n, 3);
  h.labels.assign(std::size_t(n), 0);
  auto q = p;
  for (Index a = 0; a < n; ++a) {
    h.features.row(perm[std::size_t(a)]) = g.features.row(a);
    h.labels[std::size_t(perm[std::size_t(a)])] = g.labels[std::size_t(a)];
    q.pos_embed.row(perm[std::size_t(a)]) = p.pos_embed.row(a);
  }
  q.et.attn.mask = GraphNeighborhood{h.adjacency, false};
  const auto out_g = graph_forward(g, p);
  const auto out_h = graph_forward(h, q);
  for (Index a = 0; a < n; ++a) {
    CHECK(out_h[std::size_t(perm[std::size_t(a)])] == doctest::Approx(out_g[std::size_t(a)]).epsilon(1e-12));
  }
}

TEST_CASE("outputs depend only on nodes within 2T hops") {
  // A key's weight in its neighbor's softmax depends on that neighbor's other
  // neighbors, so each step reaches two hops.
  const Index n = 9;
  auto g = make_graph(n, path_edges(n), 2, 16);
  for (int steps : {1, 2, 3}) {
    GraphModelConfig c = small_config(2);
    c.steps = steps;
    io::Rng rng(17);
    const auto p = init_graph_params(c, g, rng);
    const auto base = graph_forward(g, p);
    for (Index far = 1; far < n; ++far) {
      auto moved = g;
      moved.features.row(far).array() += 3.0;
      const double out = graph_forward(moved, p)[0];
      INFO("T=" << steps << " node " << far);
      if (far > 2 * steps) {
        CHECK(out == base[0]);
      } else {
        CHECK(out != base[0]);
      }
    }
  }
}

TEST_CASE("graph attention energy decreases at small step size") {
  auto g = make_graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}, {0, 3}}, 3, 18);
  GraphModelConfig c = small_config(3);
  io::Rng rng(19);
  const auto p = init_graph_params(c, g, rng);
  const auto traj = et_forward(embed_nodes(g, p), p.et, 0.01, 12);
  for (std::size_t t = 1; t < traj.size(); ++t) {
    CHECK(traj[t].energy.e_total <= traj[t - 1].energy.e_total + 1e-12);
  }
}

TEST_CASE("weighted binary cross-entropy") {
  const std::vector<int> labels{1, 0, 0, 1, 0, 0, 0};
  const std::vector<double> probs{0.8, 0.3, 0.1, 0.4, 0.6, 0.2, 0.5};
  const std::vector<Index> idx{0, 1, 2, 3, 4, 5};

  SUBCASE("matches brute-force summation") {
    const double sigma = 4.0 / 2.0;
    double brute = 0;
    for (Index a : idx) {
      const double l = labels[std::size_t(a)];
      const double p = probs[std::size_t(a)];
      brute += -(sigma * l * std::log(p) + (1 - l) * std::log(1 - p));
    }
    CHECK(positive_weight(labels, idx) == sigma);
    CHECK(weighted_bce(probs, labels, idx) == doctest::Approx(brute).epsilon(1e-14));
    Vector logits(7);
    for (Index a = 0; a < 7; ++a) logits(a) = std::log(probs[std::size_t(a)] / (1 - probs[std::size_t(a)]));
    CHECK(weighted_bce_logits(logits, labels, idx) == doctest::Approx(brute).epsilon(1e-12));
  }
  SUBCASE("balanced labels reduce to the plain sum") {
    const std::vector<Index> bal{0, 1, 3, 4};
    CHECK(positive_weight(labels, bal) == 1.0);
    double plain = 0;
    for (Index a : bal) {
      const double p = probs[std::size_t(a)];
      plain -= labels[std::size_t(a)] ? std::log(p) : std::log(1 - p);
    }
    CHECK(weighted_bce(probs, labels, bal) == doctest::Approx(plain).epsilon(1e-14));
  }
  SUBCASE("confident correct predictions approach zero") {
    std::vector<double> good(7);
    for (std::size_t a = 0; a < 7; ++a) good[a] = labels[a] ? 1 - 1e-12 : 1e-12;
    const double l = weighted_bce(good, labels, idx);
    CHECK(l > 0);
    CHECK(l < 1e-10);
    Vector huge(7);
    for (Index a = 0; a < 7; ++a) huge(a) = labels[std::size_t(a)] ? 800.0 : -800.0;
    CHECK(weighted_bce_logits(huge, labels, idx) == 0.0);
  }
  SUBCASE("no anomaly in the split is an error") {
    CHECK_THROWS_AS(weighted_bce(probs, labels, {1, 2}), InvalidInput);
    CHECK_THROWS_AS(positive_weight(labels, {1, 2}), InvalidInput);
  }
  SUBCASE("probabilities outside (0, 1) are rejected") {
    auto bad = probs;
    bad[0] = 1.0;
    CHECK_THROWS_AS(weighted_bce(bad, labels, idx), InvalidInput);
  }
}

TEST_CASE("metrics") {
  SUBCASE("perfect separation") {
    const std::vector<int> y{0, 1, 0, 1};
    const std::vector<double> s{0.1, 0.9, 0.2, 0.7};
    CHECK(macro_f1(s, y) == 1.0);
    CHECK(auc(s, y) == 1.0);
  }
  SUBCASE("constant scores give one half") {
    const std::vector<int> y{0, 1, 0, 0, 1};
    CHECK(auc(std::vector<double>(5, 0.3), y) == 0.5);
  }
  SUBCASE("hand-computed macro F1") {
    // Predictions 1,1,0,0 against labels 1,0,1,0: both classes have F1 1/2.
    CHECK(macro_f1({0.9, 0.6, 0.2, 0.1}, {1, 0, 1, 0}) == doctest::Approx(0.5));
    // Threshold is inclusive.
    CHECK(macro_f1({0.5, 0.4}, {1, 0}) == 1.0);
  }
  SUBCASE("AUC matches the pairwise oracle") {
    io::Rng rng(20);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 5 + std::size_t(rng.index(40));
      std::vector<int> y(n);
      std::vector<double> s(n);
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = rng.uniform() < 0.3 ? 1 : 0;
        s[i] = double(rng.index(6)) / 5.0;  // coarse grid forces ties
      }
      y[0] = 1;
      y[1] = 0;
      CHECK(auc(s, y) == doctest::Approx(pairwise_auc(s, y)).epsilon(1e-12));
    }
  }
  SUBCASE("single class is undefined") {
    CHECK_THROWS_AS(auc({0.1, 0.2}, {0, 0}), MetricUndefined);
    CHECK_THROWS_AS(macro_f1({0.1, 0.2}, {1, 1}), MetricUndefined);
  }
  SUBCASE("select") { CHECK(select(std::vector<int>{5, 6, 7}, {2, 0}) == std::vector<int>{7, 5}); }
}

TEST_CASE("splits are stratified, disjoint and covering") {
  std::vector<int> labels(200, 0);
  for (int i = 0; i < 20; ++i) labels[std::size_t(i * 10)] = 1;
  const auto s = make_split(labels, 0.4, 3);
  std::set<Index> all;
  for (const auto* part : {&s.train, &s.valid, &s.test}) {
    CHECK(std::is_sorted(part->begin(), part->end()));
    for (Index a : *part) CHECK(all.insert(a).second);
  }
  CHECK(all.size() == 200);
  CHECK(s.train.size() == 80);
  CHECK(s.valid.size() == 40);
  CHECK(s.test.size() == 80);
  auto positives = [&](const std::vector<Index>& idx) {
    return std::count_if(idx.begin(), idx.end(), [&](Index a) { return labels[std::size_t(a)] == 1; });
  };
  CHECK(positives(s.train) == 8);
  CHECK(positives(s.valid) == 4);
  CHECK(positives(s.test) == 8);

  const auto again = make_split(labels, 0.4, 3);
  CHECK(again.train == s.train);
  CHECK(make_split(labels, 0.4, 4).train != s.train);

  const auto tiny = make_split(labels, 0.01, 3);
  CHECK(tiny.train.size() + tiny.valid.size() + tiny.test.size() == 200);
  CHECK_THROWS_AS(make_split(labels, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(make_split(labels, 1.0, 1), ConfigError);
}

TEST_CASE("planted anomaly generator") {
  const auto a = gen_planted_anomaly_graph(5, 300, 0.05, 2.0);
  const auto b = gen_planted_anomaly_graph(5, 300, 0.05, 2.0);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.adjacency->neighbors == b.adjacency->neighbors);
  CHECK(gen_planted_anomaly_graph(6, 300, 0.05, 2.0).features != a.features);
  CHECK(std::count(a.labels.begin(), a.labels.end(), 1) == 15);
  CHECK(std::count(b.labels.begin(), b.labels.end(), 1) == 15);
  const auto c = gen_planted_anomaly_graph(5, 1000, 0.033, 2.0);
  CHECK(std::count(c.labels.begin(), c.labels.end(), 1) == 33);
  CHECK(a.n_nodes() == 300);
  CHECK(a.feature_dim() == 8);
  CHECK(a.adjacency->is_symmetric());

  // Without a shift every node's features are standard normal.
  const auto null = gen_planted_anomaly_graph(5, 2000, 0.05, 0.0);
  CHECK(std::abs(null.features.mean()) < 0.05);

  CHECK_THROWS_AS(gen_planted_anomaly_graph(1, 100, 0.0, 2.0), InvalidInput);
  CHECK_THROWS_AS(gen_planted_anomaly_graph(1, 100, 0.5, 2.0), InvalidInput);
  PlantedGraphSpec tight;
  tight.feature_dim = 1;
  tight.communities = 4;
  CHECK_THROWS_AS(gen_planted_anomaly_graph(1, 100, 0.1, 2.0, tight), InvalidInput);
}

TEST_CASE("anomalies carry another community's mean") {
  PlantedGraphSpec spec;
  spec.degree_out = 0;
  const auto g = gen_planted_anomaly_graph(8, 400, 0.1, 6.0, spec);
  // With no cross edges and a large shift, anomalies sit far from their neighbors.
  double normal_gap = 0, anomaly_gap = 0;
  int nn = 0, na = 0;
  for (Index a = 0; a < g.n_nodes(); ++a) {
    const auto& nb = g.adjacency->neighbors[std::size_t(a)];
    if (nb.empty()) continue;
    RowVector m = RowVector::Zero(g.feature_dim());
    for (Index b : nb) m += g.features.row(b);
    m /= double(nb.size());
    const double gap = (g.features.row(a) - m).norm();
    (g.labels[std::size_t(a)] ? anomaly_gap : normal_gap) += gap;
    ++(g.labels[std::size_t(a)] ? na : nn);
  }
  CHECK(anomaly_gap / na > 2.0 * normal_gap / nn);
}

TEST_CASE("graph text formats") {
  SUBCASE("edges") {
    const auto e = parse_edges("# comment\n0\t1\n\n2\t0\n");
    CHECK(e == std::vector<std::pair<Index, Index>>{{0, 1}, {2, 0}});
    CHECK_THROWS_WITH_AS(parse_edges("0\t1\n0 x\n"), doctest::Contains("line 2"), FormatError);
    CHECK_THROWS_AS(parse_edges("0\t1\t2\n"), FormatError);
    CHECK_THROWS_AS(parse_edges("-1\t1\n"), FormatError);
  }
  SUBCASE("features") {
    const Matrix f = parse_features_csv("1,2.5\n-3,4e-1\n");
    CHECK(f.rows() == 2);
    CHECK(f(0, 1) == 2.5);
    CHECK(f(1, 1) == 0.4);
    CHECK_THROWS_WITH_AS(parse_features_csv("1,2\n3\n"), doctest::Contains("line 2"), FormatError);
    CHECK_THROWS_AS(parse_features_csv("1,abc\n"), FormatError);
    CHECK_THROWS_AS(parse_features_csv("1,nan\n"), FormatError);
    CHECK_THROWS_AS(parse_features_csv(""), FormatError);
  }
  SUBCASE("labels") {
    CHECK(parse_labels("0\n1\n# x\n0\n") == std::vector<int>{0, 1, 0});
    CHECK_THROWS_WITH_AS(parse_labels("0\n2\n"), doctest::Contains("line 2"), FormatError);
  }
  SUBCASE("save and load round-trip") {
    const auto g = gen_planted_anomaly_graph(3, 60, 0.1, 1.0);
    const fs::path dir = fs::temp_directory_path() / "et_test_graph_io";
    fs::remove_all(dir);
    fs::create_directories(dir);
    save_graph(g, dir);
    const auto back = load_graph(dir / "edges.tsv", dir / "features.csv", dir / "labels.txt");
    CHECK(back.features == g.features);
    CHECK(back.labels == g.labels);
    CHECK(back.adjacency->neighbors == g.adjacency->neighbors);

    io::write_file(dir / "short.txt", "0\n1\n");
    CHECK_THROWS_AS(load_graph(dir / "edges.tsv", dir / "features.csv", dir / "short.txt"), ShapeError);
    io::write_file(dir / "bad_edges.tsv", "0\t60\n");
    CHECK_THROWS(load_graph(dir / "bad_edges.tsv", dir / "features.csv", dir / "labels.txt"));
  }
}

TEST_CASE("graph training") {
  const auto g = gen_planted_anomaly_graph(4, 120, 0.1, 2.0);
  const auto split = make_split(g.labels, 0.4, 1);
  GraphModelConfig m;
  m.token_dim = 8;
  m.heads = 1;
  m.head_dim = 4;
  m.memories = 8;

  SUBCASE("zero learning rate keeps the initialization") {
    GraphTrainConfig c;
    c.adam.lr = 0.0;
    c.epochs = 3;
    c.seed = 1;
    const auto r = train_graph(g, split, m, c);
    io::Rng init = io::Rng::for_purpose(c.seed, "init");
    const auto p0 = init_graph_params(m, g, init);
    CHECK(io::encode_checkpoint(to_checkpoint(r.params)) == io::encode_checkpoint(to_checkpoint(p0)));
    CHECK(r.best_epoch == 0);
    CHECK(r.history.size() == 4);
    const auto untrained = evaluate_split(graph_forward(g, p0), g.labels, split.test);
    CHECK(r.test.auc == untrained.auc);
    CHECK(r.test.macro_f1 == untrained.macro_f1);
  }
  SUBCASE("selection keeps the best validation epoch") {
    GraphTrainConfig c;
    c.epochs = 15;
    c.adam.lr = 1e-2;
    std::vector<GraphEpochRecord> seen;
    const auto r = train_graph(g, split, m, c, [&](const GraphEpochRecord& e) { seen.push_back(e); });
    CHECK(seen.size() == 16);
    for (const auto& e : seen) CHECK(e.valid.macro_f1 <= r.valid.macro_f1);
    CHECK(r.history[std::size_t(r.best_epoch)].valid.macro_f1 == r.valid.macro_f1);
    CHECK(r.history[1].loss < r.history[0].loss);
    const auto again = train_graph(g, split, m, c);
    CHECK(again.best_epoch == r.best_epoch);
    CHECK(again.test.auc == r.test.auc);
  }
  SUBCASE("learned beta stays positive") {
    GraphTrainConfig c;
    c.epochs = 5;
    c.adam.lr = 10.0;
    const auto r = train_graph(g, split, m, c);
    CHECK(r.params.et.attn.beta >= 1e-3);
  }
  SUBCASE("multi-seed report") {
    GraphTrainConfig c;
    c.epochs = 2;
    c.seed = 7;
    GraphTrainResult first;
    const auto rep = run_graph_seeds(g, m, c, 3, &first);
    REQUIRE(rep.runs.size() == 3);
    CHECK(rep.runs[0].seed == 7);
    CHECK(rep.runs[2].seed == 9);
    CHECK(first.test.auc == rep.runs[0].test.auc);
    double mean = 0;
    for (const auto& r : rep.runs) mean += r.test.auc / 3;
    CHECK(rep.test_mean.auc == doctest::Approx(mean).epsilon(1e-14));
    double ss = 0;
    for (const auto& r : rep.runs) ss += (r.test.auc - mean) * (r.test.auc - mean);
    CHECK(rep.test_std.auc == doctest::Approx(std::sqrt(ss / 2)).epsilon(1e-12));

    const std::string csv = metrics_csv(rep);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "seed,split,macro_f1,auc");
    int rows = 0;
    bool has_mean = false, has_std = false;
    while (std::getline(in, line)) {
      ++rows;
      has_mean = has_mean || line.rfind("mean,", 0) == 0;
      has_std = has_std || line.rfind("std,", 0) == 0;
    }
    CHECK(rows == 3 * 2 + 4);
    CHECK(has_mean);
    CHECK(has_std);
    CHECK(history_csv(first.history).rfind("epoch,loss,val_macro_f1,val_auc\n", 0) == 0);
  }
  SUBCASE("bad configurations") {
    GraphTrainConfig c;
    c.epochs = -1;
    CHECK_THROWS_AS(train_graph(g, split, m, c), ConfigError);
    SplitPlan no_pos = split;
    no_pos.train.erase(std::remove_if(no_pos.train.begin(), no_pos.train.end(),
                                      [&](Index a) { return g.labels[std::size_t(a)] == 1; }),
                       no_pos.train.end());
    CHECK_THROWS_AS(train_graph(g, no_pos, m, GraphTrainConfig{}), InvalidInput);
  }
}
