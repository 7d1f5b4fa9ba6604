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

#include "et/image/export.hpp"

#include <cstdio>

#include "et/io/image.hpp"

namespace et::image {

WeightKind parse_weight_kind(const std::string& name) {
  if (name == "memories" || name == "mem") return WeightKind::HopfieldMemories;
  if (name == "keys" || name == "key") return WeightKind::AttentionKeys;
  if (name == "queries" || name == "query") return WeightKind::AttentionQueries;
  throw ConfigError("unknown weight kind '" + name + "' (expected memories, keys or queries)");
}

const char* weight_prefix(WeightKind which) {
  switch (which) {
    case WeightKind::HopfieldMemories:
      return "mem";
    case WeightKind::AttentionKeys:
      return "key";
    case WeightKind::AttentionQueries:
      return "query";
  }
  return "w";
}

PatchGrid export_weights_as_patches(const ImageTaskParams& p, WeightKind which) {
  const Matrix& rows = which == WeightKind::HopfieldMemories ? p.et.hopfield.xi
                       : which == WeightKind::AttentionKeys  ? p.et.attn.w_key
                                                             : p.et.attn.w_query;
  PatchGrid grid;
  grid.patches = decode(rows, p);
  grid.grid_rows = static_cast<int>(rows.rows());
  grid.grid_cols = 1;
  grid.channels = p.config.channels;
  grid.patch_h = p.config.patch_h;
  grid.patch_w = p.config.patch_w;
  return grid;
}

io::Image patch_image(const PatchGrid& grid, Index row) {
  io::Image img(grid.channels, grid.patch_h, grid.patch_w);
  for (Index k = 0; k < grid.patch_dim(); ++k) img.data[std::size_t(k)] = grid.patches(row, k);
  return img;
}

std::vector<std::filesystem::path> write_patch_images(const PatchGrid& grid, const std::filesystem::path& dir,
                                                      const std::string& prefix) {
  if (grid.patch_dim() != Index(grid.channels) * grid.patch_h * grid.patch_w) {
    throw ShapeError("export: patch width does not match channels x patch_h x patch_w");
  }
  if (grid.channels != 1 && grid.channels != 3) throw FormatError("export: only 1 or 3 channel patches can be written");
  std::vector<std::filesystem::path> out;
  for (Index r = 0; r < grid.count(); ++r) {
    char index[32];
    std::snprintf(index, sizeof(index), "_%04lld.", static_cast<long long>(r));
    out.push_back(dir / (prefix + index + (grid.channels == 3 ? "ppm" : "pgm")));
    io::save_image(out.back(), patch_image(grid, r));
  }
  return out;
}

}  // namespace et::image
