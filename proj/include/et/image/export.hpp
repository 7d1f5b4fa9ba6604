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

#include <filesystem>
#include <string>
#include <vector>

#include "et/image/model.hpp"

namespace et::image {

enum class WeightKind { HopfieldMemories, AttentionKeys, AttentionQueries };

WeightKind parse_weight_kind(const std::string& name);
/// File prefix: "mem", "key" or "query".
const char* weight_prefix(WeightKind which);

/// Passes each selected weight row (memories: M rows; keys/queries: one row
/// per head and head coordinate, H*Y rows) through the decoder. The result
/// has one patch per row, stacked as a single-column grid.
PatchGrid export_weights_as_patches(const ImageTaskParams& p, WeightKind which);

/// Writes every patch as `<prefix>_0000.pgm` (or .ppm for 3 channels) with
/// its scale sidecar. Returns the written paths in row order.
std::vector<std::filesystem::path> write_patch_images(const PatchGrid& grid, const std::filesystem::path& dir,
                                                      const std::string& prefix);

/// Patch `row` of the grid as a standalone C x patch_h x patch_w image.
io::Image patch_image(const PatchGrid& grid, Index row);

}  // namespace et::image
