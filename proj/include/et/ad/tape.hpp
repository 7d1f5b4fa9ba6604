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

#include <memory>
#include <vector>

#include "et/common.hpp"
#include "et/core/attention.hpp"

namespace et::ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// The closed set of primitives a tape can record.
enum class Op {
  Leaf,
  Constant,
  MatMul,
  Add,
  Sub,
  Hadamard,
  Scale,
  ScaleBy,
  AddRow,
  MeanSubtractRows,
  RmsNormalizeRows,
  Relu,
  Square,
  Power,
  Softplus,
  Sigmoid,
  Reciprocal,
  Sum,
  SoftmaxRows,
  LogSumExpRows,
  GatherRows,
  SelectRows,
  SliceRows,
  ConcatCols,
  PatternScores,
  PatternSoftmax,
  PatternLogSumExp,
  PatternAggregate,
  PatternAggregateTransposed,
};

const char* op_name(Op op);

/// One recorded primitive: kind, operand ids, op attributes and the forward value.
struct Node {
  Op op = Op::Constant;
  int inputs[2] = {-1, -1};
  double scalar = 0;
  bool flag_a = false;  // MatMul: transpose lhs
  bool flag_b = false;  // MatMul: transpose rhs
  Index offset = 0;
  Index count = 0;
  std::shared_ptr<const std::vector<Index>> indices;
  std::shared_ptr<const std::vector<char>> row_flags;
  std::shared_ptr<const AttentionPattern> pattern;
  bool requires_grad = false;
  Matrix value;
};

/// Adjoints of a scalar output with respect to every node of a tape.
class Gradients {
 public:
  Gradients() = default;
  Gradients(std::vector<Matrix> adjoints, std::vector<std::pair<Index, Index>> shapes)
      : adjoints_(std::move(adjoints)), shapes_(std::move(shapes)) {}

  /// Zero matrix of the right shape when the loss does not depend on v.
  Matrix wrt(Var v) const;

 private:
  std::vector<Matrix> adjoints_;
  std::vector<std::pair<Index, Index>> shapes_;
};

/// Reverse-mode recorder. Single owner: record, then call backward once or
/// many times; nodes are appended in topological order by construction.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input (parameter or token state).
  Var leaf(Matrix value);
  /// Input the loss is never differentiated against.
  Var constant(Matrix value);
  Var scalar_leaf(double v) { return leaf(Matrix::Constant(1, 1, v)); }

  const Matrix& value(Var v) const;
  std::size_t size() const { return nodes_.size(); }
  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }

  /// Reverse sweep from a 1 x 1 output.
  Gradients backward(Var output) const;

  /// Recompute every non-input node from its operands and compare with the
  /// recorded value. True when all agree bit for bit.
  bool replay_matches() const;

  // Used by the primitive builders in this header.
  Var push(Node node);
  void check_owner(Var v) const;

 private:
  Matrix evaluate(const Node& n) const;
  void accumulate(int id, const Matrix& delta, std::vector<Matrix>& adj) const;
  void backprop_node(int id, std::vector<Matrix>& adj) const;

  std::vector<Node> nodes_;
};

// Primitive builders. All operands must live on the same tape.

Var matmul(Var a, Var b, bool transpose_a = false, bool transpose_b = false);
inline Var matmul_nt(Var a, Var b) { return matmul(a, b, false, true); }
inline Var matmul_tn(Var a, Var b) { return matmul(a, b, true, false); }
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double c);
inline Var operator*(double c, Var a) { return scale(a, c); }
/// s * a with s a 1 x 1 node.
Var scale_by(Var a, Var s);
/// Adds the 1 x cols row to every row of a.
Var add_row(Var a, Var row);
Var mean_subtract_rows(Var a);
/// Each row divided by sqrt(mean(row^2) + eps).
Var rms_normalize_rows(Var a, double eps);
Var relu(Var a);
Var square(Var a);
Var power(Var a, double exponent);
Var softplus(Var a);
Var sigmoid(Var a);
Var reciprocal(Var a);
Var sum(Var a);
Var softmax_rows(Var a);
/// rows x 1 column of per-row log-sum-exp.
Var logsumexp_rows(Var a);
Var gather_rows(Var a, std::vector<Index> rows);
/// Row i becomes `row` where flags[i] is set, else stays a.row(i).
Var select_rows(Var a, Var row, std::vector<char> flags);
Var slice_rows(Var a, Index offset, Index count);
Var concat_cols(Var a, Var b);

// Sparse attention family over an AttentionPattern (row = query, entries = keys).

/// nnz x 1: <keys.row(key(e)), queries.row(query(e))>.
Var pattern_scores(Var keys, Var queries, std::shared_ptr<const AttentionPattern> pattern);
/// nnz x 1 softmax normalized within each query row.
Var pattern_softmax(Var scores, std::shared_ptr<const AttentionPattern> pattern);
/// N x 1 per-query log-sum-exp.
Var pattern_logsumexp(Var scores, std::shared_ptr<const AttentionPattern> pattern);
/// N x Y: row c = sum_{e in row c} w_e * values.row(key(e)).
Var pattern_aggregate(Var weights, Var values, std::shared_ptr<const AttentionPattern> pattern);
/// N x Y: row b = sum_{e : key(e) = b} w_e * values.row(query(e)).
Var pattern_aggregate_transposed(Var weights, Var values,
                                 std::shared_ptr<const AttentionPattern> pattern);

}  // namespace et::ad
