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

#include "et/graph/model.hpp"

#include <cmath>

namespace et::graph {

double GraphModelConfig::initial_beta() const { return beta > 0 ? beta : 1.0 / std::sqrt(double(head_dim)); }

void GraphModelConfig::validate() const {
  if (feature_dim < 1 || token_dim < 1 || heads < 1 || head_dim < 1 || memories < 1 || hidden < 0) {
    throw ConfigError("graph model: F, D, H, Y, M must be positive");
  }
  if (beta < 0 || !(alpha >= 0) || steps < 1 || !(epsilon > 0)) {
    throw ConfigError("graph model: need beta >= 0 (0 = default), alpha >= 0, T >= 1, epsilon > 0");
  }
  if (!enable_attn && !enable_hopfield) throw ConfigError("graph model: both modules disabled");
}

GraphTaskParams init_graph_params(const GraphModelConfig& c, const GraphInstance& g, io::Rng& rng) {
  c.validate();
  g.validate();
  if (g.feature_dim() != c.feature_dim) {
    throw ShapeError("graph model: graph has " + std::to_string(g.feature_dim()) + " features, model expects " +
                     std::to_string(c.feature_dim));
  }
  const Index d = c.token_dim;
  const Index hw = c.head_width();
  GraphTaskParams p;
  p.config = c;
  p.embed = rng.normal_matrix(c.feature_dim, d, 1.0 / std::sqrt(double(c.feature_dim)));
  p.pos_embed = rng.normal_matrix(g.n_nodes(), d, 0.02);
  p.et.attn.w_key = rng.normal_matrix(c.heads * c.head_dim, d, 1.0 / std::sqrt(double(d)));
  p.et.attn.w_query = rng.normal_matrix(c.heads * c.head_dim, d, 1.0 / std::sqrt(double(d)));
  p.et.hopfield.xi = rng.normal_matrix(c.memories, d, 1.0 / std::sqrt(double(d)));
  p.head_kernel1 = rng.normal_matrix(2 * d, hw, 1.0 / std::sqrt(double(2 * d)));
  p.head_kernel2 = rng.normal_matrix(hw, 1, 1.0 / std::sqrt(double(hw)));
  p.head_bias1 = RowVector::Zero(hw);
  p.et.norm = LayerNormParams<double>::identity(d, c.epsilon);
  p.et.attn.heads = c.heads;
  p.et.attn.beta = c.initial_beta();
  p.et.attn.mask = GraphNeighborhood{with_forced_self_loops(*g.adjacency), c.self_loops};
  p.et.hopfield.activation = c.activation;
  p.et.enable_attn = c.enable_attn;
  p.et.enable_hopfield = c.enable_hopfield;
  return p;
}

GraphTaskParams zeros_like(const GraphTaskParams& p) {
  GraphTaskParams z = p;
  for (auto& v : tensor_views(z)) v.array().setZero();
  return z;
}

namespace {

template <typename P>
auto views_impl(P& p) {
  using View = std::conditional_t<std::is_const_v<P>, ad::ConstTensorView, ad::TensorView>;
  const Index h = p.config.heads;
  const Index y = p.config.head_dim;
  const Index d = p.config.token_dim;
  auto mat = [](std::string name, auto& m, bool decay, std::vector<Index> dims = {}) {
    if (dims.empty()) dims = {m.rows(), m.cols()};
    return View{std::move(name), m.data(), std::move(dims), decay};
  };
  auto vec = [](std::string name, auto& v) { return View{std::move(name), v.data(), {v.size()}, false}; };
  auto scalar = [](std::string name, auto& s) { return View{std::move(name), &s, {}, false}; };
  return std::vector<View>{
      mat("embed", p.embed, true),
      mat("pos_embed", p.pos_embed, false),
      scalar("et.norm.gamma", p.et.norm.gamma),
      vec("et.norm.delta", p.et.norm.delta),
      mat("et.w_key", p.et.attn.w_key, true, {h, y, d}),
      mat("et.w_query", p.et.attn.w_query, true, {h, y, d}),
      mat("et.xi", p.et.hopfield.xi, true),
      scalar("et.beta", p.et.attn.beta),
      mat("head.kernel1", p.head_kernel1, true),
      vec("head.bias1", p.head_bias1),
      mat("head.kernel2", p.head_kernel2, true),
      scalar("head.bias2", p.head_bias2),
  };
}

}  // namespace

std::vector<ad::TensorView> tensor_views(GraphTaskParams& p) { return views_impl(p); }
std::vector<ad::ConstTensorView> tensor_views(const GraphTaskParams& p) { return views_impl(p); }

io::Checkpoint to_checkpoint(const GraphTaskParams& p) { return io::to_checkpoint(tensor_views(p)); }

GraphTaskParams from_checkpoint(const GraphModelConfig& config, const GraphInstance& g, const io::Checkpoint& ckpt) {
  io::Rng unused(0);
  GraphTaskParams p = init_graph_params(config, g, unused);
  io::restore(ckpt, tensor_views(p));
  return p;
}

Matrix embed_nodes(const GraphInstance& g, const GraphTaskParams& p) {
  if (g.feature_dim() != p.embed.rows()) throw ShapeError("embed_nodes: feature width does not match embedding");
  if (g.n_nodes() != p.pos_embed.rows()) throw ShapeError("embed_nodes: node count does not match positional embedding");
  return g.features * p.embed + p.pos_embed;
}

Vector graph_logits(const GraphInstance& g, const GraphTaskParams& p) {
  const Matrix x0 = embed_nodes(g, p);
  const EtBlock<double> block(p.et, x0.rows());
  Matrix x = x0;
  for (int t = 0; t < p.config.steps; ++t) x = block.step(x, p.config.alpha);
  const Index d = x.cols();
  Matrix both(x.rows(), 2 * d);
  both.leftCols(d) = layer_norm_rows(x0, p.et.norm);
  both.rightCols(d) = layer_norm_rows(x, p.et.norm);
  const Matrix hidden = ((both * p.head_kernel1).rowwise() + p.head_bias1).cwiseMax(0.0);
  return (hidden * p.head_kernel2).col(0).array() + p.head_bias2;
}

std::vector<double> graph_forward(const GraphInstance& g, const GraphTaskParams& p) {
  const Vector z = graph_logits(g, p);
  std::vector<double> out(static_cast<std::size_t>(z.size()));
  for (Index a = 0; a < z.size(); ++a) out[std::size_t(a)] = 1.0 / (1.0 + std::exp(-z(a)));
  return out;
}

double positive_weight(const std::vector<int>& labels, const std::vector<Index>& idx) {
  double pos = 0, neg = 0;
  for (Index a : idx) (labels.at(std::size_t(a)) == 1 ? pos : neg) += 1;
  if (pos == 0) throw InvalidInput("weighted_bce: training split has no anomalies, class weight undefined");
  return neg / pos;
}

namespace {

double softplus(double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

}  // namespace

double weighted_bce_logits(const Vector& logits, const std::vector<int>& labels, const std::vector<Index>& idx) {
  const double sigma = positive_weight(labels, idx);
  double loss = 0;
  for (Index a : idx) {
    const double z = logits(a);
    loss += labels[std::size_t(a)] == 1 ? sigma * softplus(-z) : softplus(z);
  }
  return loss;
}

double weighted_bce(const std::vector<double>& probs, const std::vector<int>& labels, const std::vector<Index>& idx) {
  const double sigma = positive_weight(labels, idx);
  double loss = 0;
  for (Index a : idx) {
    const double p = probs.at(std::size_t(a));
    if (!(p > 0 && p < 1)) throw InvalidInput("weighted_bce: probabilities must lie in (0, 1)");
    const double l = labels[std::size_t(a)];
    loss -= sigma * l * std::log(p) + (1 - l) * std::log1p(-p);
  }
  return loss;
}

GraphTapeVars bind_graph(ad::Tape& tape, const GraphTaskParams& p) {
  GraphTapeVars v;
  v.embed = tape.leaf(p.embed);
  v.pos_embed = tape.leaf(p.pos_embed);
  v.head_kernel1 = tape.leaf(p.head_kernel1);
  v.head_bias1 = tape.leaf(p.head_bias1);
  v.head_kernel2 = tape.leaf(p.head_kernel2);
  v.head_bias2 = tape.scalar_leaf(p.head_bias2);
  v.et = ad::bind_et(tape, p.et, p.pos_embed.rows(), p.config.beta_learnable);
  return v;
}

void collect_graph_grads(const ad::Gradients& grads, const GraphTapeVars& v, GraphTaskParams& out) {
  out.embed = grads.wrt(v.embed);
  out.pos_embed = grads.wrt(v.pos_embed);
  out.head_kernel1 = grads.wrt(v.head_kernel1);
  out.head_bias1 = grads.wrt(v.head_bias1);
  out.head_kernel2 = grads.wrt(v.head_kernel2);
  out.head_bias2 = grads.wrt(v.head_bias2)(0, 0);
  ad::collect_et_grads(grads, v.et, out.et);
}

ad::Var record_graph_logits(ad::Var features, const GraphTapeVars& v, const GraphTaskParams& p) {
  if (features.cols() != p.embed.rows() || features.rows() != p.pos_embed.rows()) {
    throw ShapeError("graph model: features do not match embedding or node count");
  }
  const ad::Var x0 = ad::matmul(features, v.embed) + v.pos_embed;
  ad::Var x = x0;
  for (int t = 0; t < p.config.steps; ++t) x = ad::et_step(x, v.et, p.config.alpha);
  const ad::Var first = ad::layer_norm_rows(x0, v.et.gamma, v.et.delta, v.et.epsilon);
  const ad::Var last = ad::layer_norm_rows(x, v.et.gamma, v.et.delta, v.et.epsilon);
  const ad::Var hidden = ad::relu(ad::add_row(ad::matmul(ad::concat_cols(first, last), v.head_kernel1), v.head_bias1));
  return ad::add_row(ad::matmul(hidden, v.head_kernel2), v.head_bias2);
}

ad::Var record_weighted_bce(ad::Var logits, const std::vector<int>& labels, const std::vector<Index>& idx) {
  const double sigma = positive_weight(labels, idx);
  Matrix w_pos(Index(idx.size()), 1), w_neg(Index(idx.size()), 1);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const bool pos = labels.at(std::size_t(idx[k])) == 1;
    w_pos(Index(k), 0) = pos ? sigma : 0.0;
    w_neg(Index(k), 0) = pos ? 0.0 : 1.0;
  }
  ad::Tape& tape = *logits.tape();
  const ad::Var z = ad::gather_rows(logits, idx);
  return ad::sum(ad::hadamard(tape.constant(w_pos), ad::softplus(ad::scale(z, -1.0)))) +
         ad::sum(ad::hadamard(tape.constant(w_neg), ad::softplus(z)));
}

GraphLossAndGrad graph_loss_and_grad(const GraphInstance& g, const GraphTaskParams& p, const std::vector<Index>& idx) {
  ad::Tape tape;
  const GraphTapeVars vars = bind_graph(tape, p);
  const ad::Var logits = record_graph_logits(tape.constant(g.features), vars, p);
  const ad::Var loss = record_weighted_bce(logits, g.labels, idx);
  GraphLossAndGrad out{loss.value()(0, 0), p};
  collect_graph_grads(tape.backward(loss), vars, out.grad);
  return out;
}

double graph_loss(const GraphInstance& g, const GraphTaskParams& p, const std::vector<Index>& idx) {
  return weighted_bce_logits(graph_logits(g, p), g.labels, idx);
}

}  // namespace et::graph
