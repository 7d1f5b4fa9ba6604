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

#include <cstdint>
#include <vector>

#include "et/io/image.hpp"

namespace et::io {

enum class PatternKind { Stripes, Gradient, Rectangle };

struct SyntheticSpec {
  int channels = 1;
  int height = 32;
  int width = 32;
  double min_period = 32.0;  // stripe wavelength range, pixels
  double max_period = 64.0;
  int min_rect_side = 12;  // rectangle sides in pixels, clamped to the image; max 0 means 3/4 of it
  int max_rect_side = 24;
  std::vector<PatternKind> kinds{PatternKind::Stripes, PatternKind::Gradient, PatternKind::Rectangle};
};

/// Procedural stand-in for natural images: oriented sinusoidal stripes,
/// linear ramps and two-tone rectangles, each normalized to zero mean and
/// unit variance over all its pixels. Deterministic in `seed`.
std::vector<Image> gen_synthetic_images(std::uint64_t seed, int n, const SyntheticSpec& spec);

/// Zero mean / unit variance over all pixels, in place. Constant images are left centered.
void normalize_image(Image& image);

}  // namespace et::io
