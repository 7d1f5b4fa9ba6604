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

#include <string>
#include <vector>

#include "et/common.hpp"

namespace et::ad {

/// Named window onto a parameter tensor's storage. `dims` is the logical
/// shape; elements are in the storage order of the owning Eigen object
/// (column-major for matrices).
template <typename T>
struct BasicTensorView {
  std::string name;
  T* data = nullptr;
  std::vector<Index> dims;
  bool decay = false;  // subject to weight decay

  Index size() const {
    Index n = 1;
    for (Index d : dims) n *= d;
    return n;
  }
  Eigen::Map<std::conditional_t<std::is_const_v<T>, const Eigen::ArrayXd, Eigen::ArrayXd>> array() const {
    return {data, size()};
  }
};

using TensorView = BasicTensorView<double>;
using ConstTensorView = BasicTensorView<const double>;

inline TensorView view_of(std::string name, Matrix& m, bool decay, std::vector<Index> dims = {}) {
  if (dims.empty()) dims = {m.rows(), m.cols()};
  return {std::move(name), m.data(), std::move(dims), decay};
}
inline TensorView view_of(std::string name, Vector& v, bool decay) {
  return {std::move(name), v.data(), {v.size()}, decay};
}
inline TensorView view_of(std::string name, RowVector& v, bool decay) {
  return {std::move(name), v.data(), {v.size()}, decay};
}
inline TensorView view_of(std::string name, double& s, bool decay) {
  return {std::move(name), &s, {}, decay};
}

inline ConstTensorView as_const(const TensorView& v) { return {v.name, v.data, v.dims, v.decay}; }

inline std::vector<ConstTensorView> as_const(const std::vector<TensorView>& views) {
  std::vector<ConstTensorView> out;
  out.reserve(views.size());
  for (const auto& v : views) out.push_back(as_const(v));
  return out;
}

}  // namespace et::ad
