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

#include "et/ad/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

namespace et::ad {

namespace {

double stable_softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": operand shapes differ (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
  }
}

Matrix row_softmax(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (Index r = 0; r < a.rows(); ++r) {
    const double peak = a.row(r).maxCoeff();
    out.row(r) = (a.row(r).array() - peak).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

// Per-query softmax of pattern scores, shared by forward and backward.
Matrix segment_softmax(const Matrix& s, const AttentionPattern& p) {
  Matrix out(s.rows(), 1);
  for (Index c = 0; c < p.size(); ++c) {
    const Index begin = p.row_begin(c);
    const Index end = p.row_end(c);
    double peak = -std::numeric_limits<double>::infinity();
    for (Index e = begin; e < end; ++e) peak = std::max(peak, s(e, 0));
    double total = 0;
    for (Index e = begin; e < end; ++e) {
      out(e, 0) = std::exp(s(e, 0) - peak);
      total += out(e, 0);
    }
    for (Index e = begin; e < end; ++e) out(e, 0) /= total;
  }
  return out;
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Constant: return "constant";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Hadamard: return "hadamard";
    case Op::Scale: return "scale";
    case Op::ScaleBy: return "scale_by";
    case Op::AddRow: return "add_row";
    case Op::MeanSubtractRows: return "mean_subtract_rows";
    case Op::RmsNormalizeRows: return "rms_normalize_rows";
    case Op::Relu: return "relu";
    case Op::Square: return "square";
    case Op::Power: return "power";
    case Op::Softplus: return "softplus";
    case Op::Sigmoid: return "sigmoid";
    case Op::Reciprocal: return "reciprocal";
    case Op::Sum: return "sum";
    case Op::SoftmaxRows: return "softmax_rows";
    case Op::LogSumExpRows: return "logsumexp_rows";
    case Op::GatherRows: return "gather_rows";
    case Op::SelectRows: return "select_rows";
    case Op::SliceRows: return "slice_rows";
    case Op::ConcatCols: return "concat_cols";
    case Op::PatternScores: return "pattern_scores";
    case Op::PatternSoftmax: return "pattern_softmax";
    case Op::PatternLogSumExp: return "pattern_logsumexp";
    case Op::PatternAggregate: return "pattern_aggregate";
    case Op::PatternAggregateTransposed: return "pattern_aggregate_transposed";
  }
  return "?";
}

const Matrix& Var::value() const {
  if (!tape_) throw InvalidInput("tape: use of an unbound variable");
  return tape_->value(*this);
}

Matrix Gradients::wrt(Var v) const {
  const auto id = static_cast<std::size_t>(v.id());
  if (id >= shapes_.size()) throw InvalidInput("gradients: variable not on this tape");
  if (adjoints_[id].size() == 0) return Matrix::Zero(shapes_[id].first, shapes_[id].second);
  return adjoints_[id];
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.op = Op::Leaf;
  n.requires_grad = true;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

const Matrix& Tape::value(Var v) const {
  check_owner(v);
  return nodes_[static_cast<std::size_t>(v.id())].value;
}

void Tape::check_owner(Var v) const {
  if (v.tape() != this || v.id() < 0 || static_cast<std::size_t>(v.id()) >= nodes_.size()) {
    throw InvalidInput("tape: variable belongs to a different tape");
  }
}

Var Tape::push(Node node) {
  for (int in : node.inputs) {
    if (in < 0) continue;
    if (static_cast<std::size_t>(in) >= nodes_.size()) {
      throw InvalidInput("tape: operand recorded after its consumer");
    }
    node.requires_grad = node.requires_grad || nodes_[static_cast<std::size_t>(in)].requires_grad;
  }
  node.value = evaluate(node);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Matrix Tape::evaluate(const Node& n) const {
  auto in = [&](int k) -> const Matrix& { return nodes_[static_cast<std::size_t>(n.inputs[k])].value; };
  switch (n.op) {
    case Op::Leaf:
    case Op::Constant:
      return n.value;
    case Op::MatMul: {
      const Matrix& a = in(0);
      const Matrix& b = in(1);
      const Index inner_a = n.flag_a ? a.rows() : a.cols();
      const Index inner_b = n.flag_b ? b.cols() : b.rows();
      if (inner_a != inner_b) throw ShapeError("matmul: inner dimensions differ");
      if (n.flag_a && n.flag_b) return a.transpose() * b.transpose();
      if (n.flag_a) return a.transpose() * b;
      if (n.flag_b) return a * b.transpose();
      return a * b;
    }
    case Op::Add:
      require_same_shape(in(0), in(1), "add");
      return in(0) + in(1);
    case Op::Sub:
      require_same_shape(in(0), in(1), "sub");
      return in(0) - in(1);
    case Op::Hadamard:
      require_same_shape(in(0), in(1), "hadamard");
      return in(0).cwiseProduct(in(1));
    case Op::Scale:
      return n.scalar * in(0);
    case Op::ScaleBy:
      if (in(1).size() != 1) throw ShapeError("scale_by: scale must be 1x1");
      return in(1)(0, 0) * in(0);
    case Op::AddRow:
      if (in(1).rows() != 1 || in(1).cols() != in(0).cols()) {
        throw ShapeError("add_row: row must be 1 x cols");
      }
      return in(0).rowwise() + in(1).row(0);
    case Op::MeanSubtractRows:
      return in(0).colwise() - in(0).rowwise().mean();
    case Op::RmsNormalizeRows: {
      const Matrix& a = in(0);
      const Eigen::ArrayXd rms =
          (a.array().square().rowwise().sum() / double(a.cols()) + n.scalar).sqrt();
      return (a.array().colwise() / rms).matrix();
    }
    case Op::Relu:
      return in(0).cwiseMax(0.0);
    case Op::Square:
      return in(0).array().square().matrix();
    case Op::Power:
      return in(0).array().pow(n.scalar).matrix();
    case Op::Softplus:
      return in(0).unaryExpr([](double v) { return stable_softplus(v); });
    case Op::Sigmoid:
      return in(0).unaryExpr([](double v) { return stable_sigmoid(v); });
    case Op::Reciprocal:
      return in(0).cwiseInverse();
    case Op::Sum:
      return Matrix::Constant(1, 1, in(0).sum());
    case Op::SoftmaxRows:
      return row_softmax(in(0));
    case Op::LogSumExpRows: {
      const Matrix& a = in(0);
      Matrix out(a.rows(), 1);
      for (Index r = 0; r < a.rows(); ++r) {
        const double peak = a.row(r).maxCoeff();
        out(r, 0) = peak + std::log((a.row(r).array() - peak).exp().sum());
      }
      return out;
    }
    case Op::GatherRows: {
      const Matrix& a = in(0);
      Matrix out(static_cast<Index>(n.indices->size()), a.cols());
      for (std::size_t k = 0; k < n.indices->size(); ++k) {
        const Index r = (*n.indices)[k];
        if (r < 0 || r >= a.rows()) throw ShapeError("gather_rows: index out of range");
        out.row(static_cast<Index>(k)) = a.row(r);
      }
      return out;
    }
    case Op::SelectRows: {
      const Matrix& a = in(0);
      const Matrix& row = in(1);
      if (row.rows() != 1 || row.cols() != a.cols()) throw ShapeError("select_rows: row must be 1 x cols");
      if (static_cast<Index>(n.row_flags->size()) != a.rows()) {
        throw ShapeError("select_rows: one flag per row required");
      }
      Matrix out = a;
      for (Index r = 0; r < a.rows(); ++r) {
        if ((*n.row_flags)[static_cast<std::size_t>(r)]) out.row(r) = row.row(0);
      }
      return out;
    }
    case Op::SliceRows:
      if (n.offset < 0 || n.count < 0 || n.offset + n.count > in(0).rows()) {
        throw ShapeError("slice_rows: range out of bounds");
      }
      return in(0).middleRows(n.offset, n.count);
    case Op::ConcatCols: {
      if (in(0).rows() != in(1).rows()) throw ShapeError("concat_cols: row counts differ");
      Matrix out(in(0).rows(), in(0).cols() + in(1).cols());
      out << in(0), in(1);
      return out;
    }
    case Op::PatternScores: {
      const Matrix& keys = in(0);
      const Matrix& queries = in(1);
      const AttentionPattern& p = *n.pattern;
      if (keys.rows() != p.size() || queries.rows() != p.size() || keys.cols() != queries.cols()) {
        throw ShapeError("pattern_scores: operands do not match pattern");
      }
      Matrix out(p.nnz(), 1);
      for (Index e = 0; e < p.nnz(); ++e) out(e, 0) = keys.row(p.key(e)).dot(queries.row(p.query(e)));
      return out;
    }
    case Op::PatternSoftmax:
      if (in(0).rows() != n.pattern->nnz() || in(0).cols() != 1) {
        throw ShapeError("pattern_softmax: scores do not match pattern");
      }
      return segment_softmax(in(0), *n.pattern);
    case Op::PatternLogSumExp: {
      const Matrix& s = in(0);
      const AttentionPattern& p = *n.pattern;
      if (s.rows() != p.nnz() || s.cols() != 1) throw ShapeError("pattern_logsumexp: scores do not match pattern");
      Matrix out(p.size(), 1);
      for (Index c = 0; c < p.size(); ++c) {
        out(c, 0) = et::detail::row_logsumexp(s.data() + p.row_begin(c), p.row_end(c) - p.row_begin(c));
      }
      return out;
    }
    case Op::PatternAggregate:
    case Op::PatternAggregateTransposed: {
      const Matrix& w = in(0);
      const Matrix& v = in(1);
      const AttentionPattern& p = *n.pattern;
      if (w.rows() != p.nnz() || w.cols() != 1 || v.rows() != p.size()) {
        throw ShapeError("pattern_aggregate: operands do not match pattern");
      }
      Matrix out = Matrix::Zero(p.size(), v.cols());
      const bool transposed = n.op == Op::PatternAggregateTransposed;
      for (Index e = 0; e < p.nnz(); ++e) {
        const Index dst = transposed ? p.key(e) : p.query(e);
        const Index src = transposed ? p.query(e) : p.key(e);
        out.row(dst) += w(e, 0) * v.row(src);
      }
      return out;
    }
  }
  throw InvalidInput("tape: unsupported primitive");
}

bool Tape::replay_matches() const {
  for (const Node& n : nodes_) {
    if (n.op == Op::Leaf || n.op == Op::Constant) continue;
    const Matrix again = evaluate(n);
    if (again.rows() != n.value.rows() || again.cols() != n.value.cols()) return false;
    for (Index k = 0; k < again.size(); ++k) {
      // Bitwise comparison so NaN payloads and signed zeros count as well.
      const double a = again.data()[k];
      const double b = n.value.data()[k];
      if (std::memcmp(&a, &b, sizeof(double)) != 0) return false;
    }
  }
  return true;
}

void Tape::accumulate(int id, const Matrix& delta, std::vector<Matrix>& adj) const {
  const auto k = static_cast<std::size_t>(id);
  if (!nodes_[k].requires_grad) return;
  if (adj[k].size() == 0) {
    adj[k] = delta;
  } else {
    adj[k] += delta;
  }
}

Gradients Tape::backward(Var output) const {
  check_owner(output);
  const Matrix& out_value = value(output);
  if (out_value.rows() != 1 || out_value.cols() != 1) {
    throw ShapeError("backward: output must be a 1x1 scalar");
  }
  std::vector<Matrix> adj(nodes_.size());
  accumulate(output.id(), Matrix::Ones(1, 1), adj);
  for (int id = output.id(); id >= 0; --id) {
    if (adj[static_cast<std::size_t>(id)].size() == 0) continue;
    backprop_node(id, adj);
  }
  std::vector<std::pair<Index, Index>> shapes;
  shapes.reserve(nodes_.size());
  for (const Node& n : nodes_) shapes.emplace_back(n.value.rows(), n.value.cols());
  return Gradients(std::move(adj), std::move(shapes));
}

void Tape::backprop_node(int id, std::vector<Matrix>& adj) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  const Matrix& dy = adj[static_cast<std::size_t>(id)];
  auto in = [&](int k) -> const Matrix& { return nodes_[static_cast<std::size_t>(n.inputs[k])].value; };
  auto needs = [&](int k) { return nodes_[static_cast<std::size_t>(n.inputs[k])].requires_grad; };
  auto push = [&](int k, const Matrix& d) { accumulate(n.inputs[k], d, adj); };

  switch (n.op) {
    case Op::Leaf:
    case Op::Constant:
      return;
    case Op::MatMul: {
      // y = op(a) op(b)
      const Matrix& a = in(0);
      const Matrix& b = in(1);
      if (needs(0)) {
        // d op(a) = dy op(b)^T
        Matrix d_opa = n.flag_b ? Matrix(dy * b) : Matrix(dy * b.transpose());
        push(0, n.flag_a ? Matrix(d_opa.transpose()) : d_opa);
      }
      if (needs(1)) {
        Matrix d_opb = n.flag_a ? Matrix(a * dy) : Matrix(a.transpose() * dy);
        push(1, n.flag_b ? Matrix(d_opb.transpose()) : d_opb);
      }
      return;
    }
    case Op::Add:
      if (needs(0)) push(0, dy);
      if (needs(1)) push(1, dy);
      return;
    case Op::Sub:
      if (needs(0)) push(0, dy);
      if (needs(1)) push(1, -dy);
      return;
    case Op::Hadamard:
      if (needs(0)) push(0, dy.cwiseProduct(in(1)));
      if (needs(1)) push(1, dy.cwiseProduct(in(0)));
      return;
    case Op::Scale:
      push(0, n.scalar * dy);
      return;
    case Op::ScaleBy:
      if (needs(0)) push(0, in(1)(0, 0) * dy);
      if (needs(1)) push(1, Matrix::Constant(1, 1, dy.cwiseProduct(in(0)).sum()));
      return;
    case Op::AddRow:
      if (needs(0)) push(0, dy);
      if (needs(1)) push(1, dy.colwise().sum());
      return;
    case Op::MeanSubtractRows:
      push(0, dy.colwise() - dy.rowwise().mean());
      return;
    case Op::RmsNormalizeRows: {
      // y = a / r, r = sqrt(mean(a^2) + eps):  da = dy / r - a <a, dy> / (D r^3)
      const Matrix& a = in(0);
      const double d = double(a.cols());
      const Eigen::ArrayXd r = (a.array().square().rowwise().sum() / d + n.scalar).sqrt();
      const Eigen::ArrayXd proj = (a.array() * dy.array()).rowwise().sum();
      const Eigen::ArrayXd coef = proj / (d * r.cube());
      Matrix da = (dy.array().colwise() / r).matrix();
      da.array() -= a.array().colwise() * coef;
      push(0, da);
      return;
    }
    case Op::Relu:
      push(0, (in(0).array() > 0.0).select(dy.array(), 0.0).matrix());
      return;
    case Op::Square:
      push(0, 2.0 * in(0).cwiseProduct(dy));
      return;
    case Op::Power:
      push(0, (n.scalar * in(0).array().pow(n.scalar - 1.0) * dy.array()).matrix());
      return;
    case Op::Softplus:
      push(0, in(0).unaryExpr([](double v) { return stable_sigmoid(v); }).cwiseProduct(dy));
      return;
    case Op::Sigmoid:
      push(0, (n.value.array() * (1.0 - n.value.array()) * dy.array()).matrix());
      return;
    case Op::Reciprocal:
      push(0, (-dy.array() * n.value.array().square()).matrix());
      return;
    case Op::Sum:
      push(0, Matrix::Constant(in(0).rows(), in(0).cols(), dy(0, 0)));
      return;
    case Op::SoftmaxRows: {
      const Matrix& p = n.value;
      const Eigen::ArrayXd inner = (p.array() * dy.array()).rowwise().sum();
      push(0, (p.array() * (dy.array().colwise() - inner)).matrix());
      return;
    }
    case Op::LogSumExpRows:
      push(0, (row_softmax(in(0)).array().colwise() * dy.col(0).array()).matrix());
      return;
    case Op::GatherRows: {
      Matrix da = Matrix::Zero(in(0).rows(), in(0).cols());
      for (std::size_t k = 0; k < n.indices->size(); ++k) {
        da.row((*n.indices)[k]) += dy.row(static_cast<Index>(k));
      }
      push(0, da);
      return;
    }
    case Op::SelectRows: {
      Matrix da = dy;
      Matrix drow = Matrix::Zero(1, dy.cols());
      for (Index r = 0; r < dy.rows(); ++r) {
        if ((*n.row_flags)[static_cast<std::size_t>(r)]) {
          drow += dy.row(r);
          da.row(r).setZero();
        }
      }
      if (needs(0)) push(0, da);
      if (needs(1)) push(1, drow);
      return;
    }
    case Op::SliceRows: {
      Matrix da = Matrix::Zero(in(0).rows(), in(0).cols());
      da.middleRows(n.offset, n.count) = dy;
      push(0, da);
      return;
    }
    case Op::ConcatCols:
      if (needs(0)) push(0, dy.leftCols(in(0).cols()));
      if (needs(1)) push(1, dy.rightCols(in(1).cols()));
      return;
    case Op::PatternScores: {
      const Matrix& keys = in(0);
      const Matrix& queries = in(1);
      const AttentionPattern& p = *n.pattern;
      Matrix dk = Matrix::Zero(keys.rows(), keys.cols());
      Matrix dq = Matrix::Zero(queries.rows(), queries.cols());
      for (Index e = 0; e < p.nnz(); ++e) {
        const double g = dy(e, 0);
        if (g == 0.0) continue;
        dk.row(p.key(e)) += g * queries.row(p.query(e));
        dq.row(p.query(e)) += g * keys.row(p.key(e));
      }
      if (needs(0)) push(0, dk);
      if (needs(1)) push(1, dq);
      return;
    }
    case Op::PatternSoftmax: {
      const Matrix& prob = n.value;
      const AttentionPattern& p = *n.pattern;
      Matrix ds(prob.rows(), 1);
      for (Index c = 0; c < p.size(); ++c) {
        double inner = 0;
        for (Index e = p.row_begin(c); e < p.row_end(c); ++e) inner += prob(e, 0) * dy(e, 0);
        for (Index e = p.row_begin(c); e < p.row_end(c); ++e) ds(e, 0) = prob(e, 0) * (dy(e, 0) - inner);
      }
      push(0, ds);
      return;
    }
    case Op::PatternLogSumExp: {
      const AttentionPattern& p = *n.pattern;
      Matrix ds = segment_softmax(in(0), p);
      for (Index e = 0; e < p.nnz(); ++e) ds(e, 0) *= dy(p.query(e), 0);
      push(0, ds);
      return;
    }
    case Op::PatternAggregate:
    case Op::PatternAggregateTransposed: {
      const Matrix& w = in(0);
      const Matrix& v = in(1);
      const AttentionPattern& p = *n.pattern;
      const bool transposed = n.op == Op::PatternAggregateTransposed;
      Matrix dw(w.rows(), 1);
      Matrix dv = Matrix::Zero(v.rows(), v.cols());
      for (Index e = 0; e < p.nnz(); ++e) {
        const Index dst = transposed ? p.key(e) : p.query(e);
        const Index src = transposed ? p.query(e) : p.key(e);
        dw(e, 0) = dy.row(dst).dot(v.row(src));
        dv.row(src) += w(e, 0) * dy.row(dst);
      }
      if (needs(0)) push(0, dw);
      if (needs(1)) push(1, dv);
      return;
    }
  }
}

// Builders.

namespace {

Tape& owner(Var a) {
  if (!a.valid()) throw InvalidInput("tape: use of an unbound variable");
  return *a.tape();
}

Tape& owner(Var a, Var b) {
  Tape& t = owner(a);
  t.check_owner(b);
  return t;
}

Var unary(Op op, Var a, double scalar = 0) {
  Tape& t = owner(a);
  t.check_owner(a);
  Node n;
  n.op = op;
  n.inputs[0] = a.id();
  n.scalar = scalar;
  return t.push(std::move(n));
}

Var binary(Op op, Var a, Var b) {
  Tape& t = owner(a, b);
  t.check_owner(a);
  Node n;
  n.op = op;
  n.inputs[0] = a.id();
  n.inputs[1] = b.id();
  return t.push(std::move(n));
}

void require_pattern(const std::shared_ptr<const AttentionPattern>& p) {
  if (!p) throw InvalidInput("tape: attention primitive without a pattern");
}

}  // namespace

Var matmul(Var a, Var b, bool transpose_a, bool transpose_b) {
  Tape& t = owner(a, b);
  t.check_owner(a);
  Node n;
  n.op = Op::MatMul;
  n.inputs[0] = a.id();
  n.inputs[1] = b.id();
  n.flag_a = transpose_a;
  n.flag_b = transpose_b;
  return t.push(std::move(n));
}

Var operator+(Var a, Var b) { return binary(Op::Add, a, b); }
Var operator-(Var a, Var b) { return binary(Op::Sub, a, b); }
Var hadamard(Var a, Var b) { return binary(Op::Hadamard, a, b); }
Var scale(Var a, double c) { return unary(Op::Scale, a, c); }
Var scale_by(Var a, Var s) { return binary(Op::ScaleBy, a, s); }
Var add_row(Var a, Var row) { return binary(Op::AddRow, a, row); }
Var mean_subtract_rows(Var a) { return unary(Op::MeanSubtractRows, a); }

Var rms_normalize_rows(Var a, double eps) {
  if (!(eps >= 0)) throw InvalidInput("rms_normalize_rows: eps must be non-negative");
  return unary(Op::RmsNormalizeRows, a, eps);
}

Var relu(Var a) { return unary(Op::Relu, a); }
Var square(Var a) { return unary(Op::Square, a); }
Var power(Var a, double exponent) { return unary(Op::Power, a, exponent); }
Var softplus(Var a) { return unary(Op::Softplus, a); }
Var sigmoid(Var a) { return unary(Op::Sigmoid, a); }
Var reciprocal(Var a) { return unary(Op::Reciprocal, a); }
Var sum(Var a) { return unary(Op::Sum, a); }
Var softmax_rows(Var a) { return unary(Op::SoftmaxRows, a); }
Var logsumexp_rows(Var a) { return unary(Op::LogSumExpRows, a); }

Var gather_rows(Var a, std::vector<Index> rows) {
  Tape& t = owner(a);
  t.check_owner(a);
  Node n;
  n.op = Op::GatherRows;
  n.inputs[0] = a.id();
  n.indices = std::make_shared<const std::vector<Index>>(std::move(rows));
  return t.push(std::move(n));
}

Var select_rows(Var a, Var row, std::vector<char> flags) {
  Tape& t = owner(a, row);
  t.check_owner(a);
  Node n;
  n.op = Op::SelectRows;
  n.inputs[0] = a.id();
  n.inputs[1] = row.id();
  n.row_flags = std::make_shared<const std::vector<char>>(std::move(flags));
  return t.push(std::move(n));
}

Var slice_rows(Var a, Index offset, Index count) {
  Tape& t = owner(a);
  t.check_owner(a);
  Node n;
  n.op = Op::SliceRows;
  n.inputs[0] = a.id();
  n.offset = offset;
  n.count = count;
  return t.push(std::move(n));
}

Var concat_cols(Var a, Var b) { return binary(Op::ConcatCols, a, b); }

namespace {

Var pattern_op(Op op, Var a, Var b, std::shared_ptr<const AttentionPattern> pattern) {
  require_pattern(pattern);
  Tape& t = b.valid() ? owner(a, b) : owner(a);
  t.check_owner(a);
  Node n;
  n.op = op;
  n.inputs[0] = a.id();
  n.inputs[1] = b.valid() ? b.id() : -1;
  n.pattern = std::move(pattern);
  return t.push(std::move(n));
}

}  // namespace

Var pattern_scores(Var keys, Var queries, std::shared_ptr<const AttentionPattern> pattern) {
  return pattern_op(Op::PatternScores, keys, queries, std::move(pattern));
}

Var pattern_softmax(Var scores, std::shared_ptr<const AttentionPattern> pattern) {
  return pattern_op(Op::PatternSoftmax, scores, Var{}, std::move(pattern));
}

Var pattern_logsumexp(Var scores, std::shared_ptr<const AttentionPattern> pattern) {
  return pattern_op(Op::PatternLogSumExp, scores, Var{}, std::move(pattern));
}

Var pattern_aggregate(Var weights, Var values, std::shared_ptr<const AttentionPattern> pattern) {
  return pattern_op(Op::PatternAggregate, weights, values, std::move(pattern));
}

Var pattern_aggregate_transposed(Var weights, Var values,
                                 std::shared_ptr<const AttentionPattern> pattern) {
  return pattern_op(Op::PatternAggregateTransposed, weights, values, std::move(pattern));
}

}  // namespace et::ad
