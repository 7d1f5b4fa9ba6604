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

#include "et/common.hpp"
#include "et/io/image.hpp"

namespace et::image {

/// Non-overlapping patches in row-major grid order; each row holds one
/// patch flattened as (channel, dy, dx).
struct PatchGrid {
  Matrix patches;  // N x P
  int grid_rows = 0;
  int grid_cols = 0;
  int channels = 1;
  int patch_h = 1;
  int patch_w = 1;

  Index count() const { return patches.rows(); }
  Index patch_dim() const { return patches.cols(); }
};

/// Throws ShapeError when the image is not divisible into k_h x k_w patches.
PatchGrid patchify(const io::Image& image, int patch_h, int patch_w);
io::Image unpatchify(const PatchGrid& grid);

}  // namespace et::image
