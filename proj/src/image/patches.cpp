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

#include "et/image/patches.hpp"

#include <string>

namespace et::image {

PatchGrid patchify(const io::Image& image, int patch_h, int patch_w) {
  if (patch_h < 1 || patch_w < 1) throw ShapeError("patchify: patch dims must be positive");
  if (image.height % patch_h != 0 || image.width % patch_w != 0) {
    throw ShapeError("patchify: image " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                     " is not divisible into " + std::to_string(patch_h) + "x" + std::to_string(patch_w) +
                     " patches");
  }
  PatchGrid grid;
  grid.grid_rows = image.height / patch_h;
  grid.grid_cols = image.width / patch_w;
  grid.channels = image.channels;
  grid.patch_h = patch_h;
  grid.patch_w = patch_w;
  grid.patches.resize(Index(grid.grid_rows) * grid.grid_cols, Index(image.channels) * patch_h * patch_w);
  for (int gr = 0; gr < grid.grid_rows; ++gr) {
    for (int gc = 0; gc < grid.grid_cols; ++gc) {
      const Index row = Index(gr) * grid.grid_cols + gc;
      Index k = 0;
      for (int c = 0; c < image.channels; ++c) {
        for (int dy = 0; dy < patch_h; ++dy) {
          for (int dx = 0; dx < patch_w; ++dx) {
            grid.patches(row, k++) = image.at(c, gr * patch_h + dy, gc * patch_w + dx);
          }
        }
      }
    }
  }
  return grid;
}

io::Image unpatchify(const PatchGrid& grid) {
  if (grid.patches.rows() != Index(grid.grid_rows) * grid.grid_cols ||
      grid.patches.cols() != Index(grid.channels) * grid.patch_h * grid.patch_w) {
    throw ShapeError("unpatchify: patch matrix does not match grid geometry");
  }
  io::Image image(grid.channels, grid.grid_rows * grid.patch_h, grid.grid_cols * grid.patch_w);
  for (int gr = 0; gr < grid.grid_rows; ++gr) {
    for (int gc = 0; gc < grid.grid_cols; ++gc) {
      const Index row = Index(gr) * grid.grid_cols + gc;
      Index k = 0;
      for (int c = 0; c < grid.channels; ++c) {
        for (int dy = 0; dy < grid.patch_h; ++dy) {
          for (int dx = 0; dx < grid.patch_w; ++dx) {
            image.at(c, gr * grid.patch_h + dy, gc * grid.patch_w + dx) = grid.patches(row, k++);
          }
        }
      }
    }
  }
  return image;
}

}  // namespace et::image
