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

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <variant>
#include <vector>

#include "et/common.hpp"

namespace et {

/// Undirected neighbor lists; neighbors[a] holds the nodes adjacent to a.
struct Adjacency {
  std::vector<std::vector<Index>> neighbors;

  Index size() const { return static_cast<Index>(neighbors.size()); }
  bool is_symmetric() const;
};

/// Keys B admissible for query C.
struct ExcludeSelf {};   // B != C
struct IncludeSelf {};   // every B
struct GraphNeighborhood {
  std::shared_ptr<const Adjacency> adjacency;
  bool include_self = false;
};
using MaskMode = std::variant<ExcludeSelf, IncludeSelf, GraphNeighborhood>;

/// Compressed sparse row layout of the attention mask: row = query token,
/// column entries = admissible key tokens, in increasing key order.
class AttentionPattern {
 public:
  AttentionPattern() = default;

  /// Throws DegenerateMask when some query has no admissible key.
  static AttentionPattern build(Index n_tokens, const MaskMode& mode);

  Index size() const { return static_cast<Index>(row_start_.size()) - 1; }
  Index nnz() const { return static_cast<Index>(keys_.size()); }
  Index row_begin(Index query) const { return row_start_[query]; }
  Index row_end(Index query) const { return row_start_[query + 1]; }
  Index key(Index entry) const { return keys_[entry]; }
  Index query(Index entry) const { return queries_[entry]; }

 private:
  std::vector<Index> row_start_{0};
  std::vector<Index> keys_;
  std::vector<Index> queries_;
};

/// Key/query kernels stored head-major: row h*Y + alpha of w_key is W^K[alpha, h, :].
template <typename Scalar>
struct AttentionParams {
  Mat<Scalar> w_key;
  Mat<Scalar> w_query;
  Index heads = 1;
  Scalar beta = Scalar(1);
  MaskMode mask = ExcludeSelf{};

  Index head_dim() const { return heads > 0 ? w_key.rows() / heads : 0; }
  Index dim() const { return w_key.cols(); }

  auto key_block(Index h) const { return w_key.middleRows(h * head_dim(), head_dim()); }
  auto query_block(Index h) const { return w_query.middleRows(h * head_dim(), head_dim()); }

  void validate() const {
    if (heads < 1 || w_key.rows() % heads != 0 || w_key.rows() == 0) {
      throw ShapeError("attention: kernel rows must be a positive multiple of heads");
    }
    if (w_key.rows() != w_query.rows() || w_key.cols() != w_query.cols()) {
      throw ShapeError("attention: key and query kernels must share shape");
    }
    if (!(beta > Scalar(0)) || !std::isfinite(static_cast<double>(beta))) {
      throw InvalidInput("attention: beta must be positive and finite");
    }
    if (const auto* graph = std::get_if<GraphNeighborhood>(&mask)) {
      if (!graph->adjacency) throw InvalidInput("attention: graph mask without adjacency");
      if (!graph->adjacency->is_symmetric()) {
        throw InvalidInput("attention: graph adjacency must be symmetric");
      }
    }
  }
};

/// The two halves of -dE_att/dg. `from` is the token attending to others
/// (ordinary softmax attention with values W^Q^T K); `to` is the token being
/// attended to, which has no counterpart in a conventional transformer.
template <typename Scalar>
struct AttentionGradTerms {
  Mat<Scalar> from;
  Mat<Scalar> to;

  Mat<Scalar> total() const { return from + to; }
};

namespace detail {

// Numerically stable log-sum-exp and softmax over one pattern row.
template <typename Scalar>
Scalar row_logsumexp(const Scalar* scores, Index count) {
  Scalar peak = -std::numeric_limits<Scalar>::infinity();
  for (Index e = 0; e < count; ++e) peak = std::max(peak, scores[e]);
  Scalar acc = 0;
  for (Index e = 0; e < count; ++e) acc += std::exp(scores[e] - peak);
  return peak + std::log(acc);
}

// beta * <K_b, Q_c> for every admissible (c, b) entry of the pattern.
template <typename Scalar>
Vec<Scalar> pattern_scores(const Mat<Scalar>& keys, const Mat<Scalar>& queries,
                           const AttentionPattern& pattern, Scalar beta) {
  Vec<Scalar> s(pattern.nnz());
  for (Index e = 0; e < pattern.nnz(); ++e) {
    s[e] = beta * keys.row(pattern.key(e)).dot(queries.row(pattern.query(e)));
  }
  return s;
}

template <typename Scalar>
void check_attention_inputs(const Mat<Scalar>& g, const AttentionParams<Scalar>& a,
                            const AttentionPattern& pattern) {
  a.validate();
  if (g.cols() != a.dim()) throw ShapeError("attention: token width does not match kernels");
  if (pattern.size() != g.rows()) throw ShapeError("attention: pattern size does not match tokens");
  if (!all_finite(g)) throw InvalidInput("attention: non-finite tokens");
}

}  // namespace detail

/// E_att = -(1/beta) sum_h sum_C log sum_{B in mask(C)} exp(beta <K_hB, Q_hC>).
template <typename Scalar>
Scalar attention_energy(const Mat<Scalar>& g, const AttentionParams<Scalar>& a,
                        const AttentionPattern& pattern) {
  detail::check_attention_inputs(g, a, pattern);
  Scalar energy = 0;
  for (Index h = 0; h < a.heads; ++h) {
    const Mat<Scalar> keys = g * a.key_block(h).transpose();
    const Mat<Scalar> queries = g * a.query_block(h).transpose();
    const Vec<Scalar> s = detail::pattern_scores(keys, queries, pattern, a.beta);
    for (Index c = 0; c < pattern.size(); ++c) {
      const Index begin = pattern.row_begin(c);
      energy -= detail::row_logsumexp(s.data() + begin, pattern.row_end(c) - begin) / a.beta;
    }
  }
  return energy;
}

template <typename Scalar>
Scalar attention_energy(const Mat<Scalar>& g, const AttentionParams<Scalar>& a) {
  return attention_energy(g, a, AttentionPattern::build(g.rows(), a.mask));
}

/// Both terms of -dE_att/dg, per head summed.
template <typename Scalar>
AttentionGradTerms<Scalar> attention_grad_terms(const Mat<Scalar>& g,
                                                const AttentionParams<Scalar>& a,
                                                const AttentionPattern& pattern) {
  detail::check_attention_inputs(g, a, pattern);
  const Index n = g.rows();
  const Index y = a.head_dim();
  AttentionGradTerms<Scalar> out{Mat<Scalar>::Zero(n, g.cols()), Mat<Scalar>::Zero(n, g.cols())};
  for (Index h = 0; h < a.heads; ++h) {
    const Mat<Scalar> keys = g * a.key_block(h).transpose();
    const Mat<Scalar> queries = g * a.query_block(h).transpose();
    Vec<Scalar> p = detail::pattern_scores(keys, queries, pattern, a.beta);
    Mat<Scalar> weighted_keys = Mat<Scalar>::Zero(n, y);     // sum_B P[C,B] K_B, at row C
    Mat<Scalar> weighted_queries = Mat<Scalar>::Zero(n, y);  // sum_C P[C,B] Q_C, at row B
    for (Index c = 0; c < n; ++c) {
      const Index begin = pattern.row_begin(c);
      const Index end = pattern.row_end(c);
      const Scalar lse = detail::row_logsumexp(p.data() + begin, end - begin);
      for (Index e = begin; e < end; ++e) {
        p[e] = std::exp(p[e] - lse);
        weighted_keys.row(c) += p[e] * keys.row(pattern.key(e));
        weighted_queries.row(pattern.key(e)) += p[e] * queries.row(c);
      }
    }
    out.from.noalias() += weighted_keys * a.query_block(h);
    out.to.noalias() += weighted_queries * a.key_block(h);
  }
  return out;
}

/// -dE_att/dg.
template <typename Scalar>
Mat<Scalar> attention_grad(const Mat<Scalar>& g, const AttentionParams<Scalar>& a,
                           const AttentionPattern& pattern) {
  return attention_grad_terms(g, a, pattern).total();
}

template <typename Scalar>
Mat<Scalar> attention_grad(const Mat<Scalar>& g, const AttentionParams<Scalar>& a) {
  return attention_grad(g, a, AttentionPattern::build(g.rows(), a.mask));
}

}  // namespace et
