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

#include <functional>

#include "et/common.hpp"

namespace et::ad {

/// Central differences (f(p + h e_k) - f(p - h e_k)) / 2h for every coordinate k.
Matrix finite_diff(const std::function<double(const Matrix&)>& f, const Matrix& point, double h = 1e-5);

/// max|a - b| / max(max|a|, max|b|), with 0/0 taken as 0. Used by every
/// gradient check so tolerances mean the same thing everywhere.
double relative_error(const Matrix& analytic, const Matrix& reference);

}  // namespace et::ad
