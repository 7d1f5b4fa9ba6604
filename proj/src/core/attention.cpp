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

#include "et/core/attention.hpp"

#include <string>

namespace et {

bool Adjacency::is_symmetric() const {
  const Index n = size();
  for (Index a = 0; a < n; ++a) {
    for (Index b : neighbors[a]) {
      if (b < 0 || b >= n) return false;
      const auto& back = neighbors[b];
      if (std::find(back.begin(), back.end(), a) == back.end()) return false;
    }
  }
  return true;
}

AttentionPattern AttentionPattern::build(Index n_tokens, const MaskMode& mode) {
  if (n_tokens < 1) throw InvalidInput("attention pattern: need at least one token");
  AttentionPattern p;
  p.row_start_.reserve(static_cast<std::size_t>(n_tokens) + 1);
  auto close_row = [&](Index c) {
    if (static_cast<Index>(p.keys_.size()) == p.row_start_.back()) {
      throw DegenerateMask("attention pattern: token " + std::to_string(c) +
                           " has no admissible key");
    }
    p.row_start_.push_back(static_cast<Index>(p.keys_.size()));
  };

  if (std::holds_alternative<ExcludeSelf>(mode) || std::holds_alternative<IncludeSelf>(mode)) {
    const bool self = std::holds_alternative<IncludeSelf>(mode);
    for (Index c = 0; c < n_tokens; ++c) {
      for (Index b = 0; b < n_tokens; ++b) {
        if (b == c && !self) continue;
        p.keys_.push_back(b);
        p.queries_.push_back(c);
      }
      close_row(c);
    }
    return p;
  }

  const auto& graph = std::get<GraphNeighborhood>(mode);
  if (!graph.adjacency) throw InvalidInput("attention pattern: graph mask without adjacency");
  if (graph.adjacency->size() != n_tokens) {
    throw ShapeError("attention pattern: adjacency size does not match token count");
  }
  std::vector<Index> row;
  for (Index c = 0; c < n_tokens; ++c) {
    row = graph.adjacency->neighbors[c];
    if (graph.include_self) row.push_back(c);
    for (Index b : row) {
      if (b < 0 || b >= n_tokens) throw InvalidInput("attention pattern: neighbor out of range");
    }
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    for (Index b : row) {
      p.keys_.push_back(b);
      p.queries_.push_back(c);
    }
    close_row(c);
  }
  return p;
}

}  // namespace et
