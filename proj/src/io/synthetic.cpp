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

#include "et/io/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "et/io/rng.hpp"

namespace et::io {

void normalize_image(Image& image) {
  if (image.data.empty()) return;
  double mean = 0;
  for (double v : image.data) mean += v;
  mean /= double(image.data.size());
  double var = 0;
  for (double v : image.data) var += (v - mean) * (v - mean);
  var /= double(image.data.size());
  const double inv = var > 0 ? 1.0 / std::sqrt(var) : 1.0;
  for (double& v : image.data) v = (v - mean) * inv;
}

namespace {

Image render(Rng& rng, const SyntheticSpec& spec) {
  const PatternKind kind = spec.kinds[std::size_t(rng.index(Index(spec.kinds.size())))];
  const double theta = rng.uniform(0.0, std::numbers::pi);
  const double dir_x = std::cos(theta);
  const double dir_y = std::sin(theta);
  const double period = rng.uniform(spec.min_period, spec.max_period);
  const double phase = rng.uniform(0.0, 2 * std::numbers::pi);
  auto side = [&](int extent) {
    const int hi = std::min(extent, spec.max_rect_side > 0 ? spec.max_rect_side : std::max(1, extent * 3 / 4));
    const int lo = std::min(hi, std::max(1, spec.min_rect_side));
    return lo + int(rng.index(hi - lo + 1));
  };
  const int rw = side(spec.width);
  const int rh = side(spec.height);
  const int rx = int(rng.index(spec.width - rw + 1));
  const int ry = int(rng.index(spec.height - rh + 1));

  Image img(spec.channels, spec.height, spec.width);
  std::vector<double> gain(spec.channels), bias(spec.channels);
  for (int c = 0; c < spec.channels; ++c) {
    gain[c] = spec.channels == 1 ? 1.0 : rng.uniform(0.3, 1.0);
    bias[c] = spec.channels == 1 ? 0.0 : rng.uniform(-0.5, 0.5);
  }
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const double along = x * dir_x + y * dir_y;
      double f = 0;
      switch (kind) {
        case PatternKind::Stripes:
          f = std::sin(2 * std::numbers::pi * along / period + phase);
          break;
        case PatternKind::Gradient:
          f = along;
          break;
        case PatternKind::Rectangle:
          f = (x >= rx && x < rx + rw && y >= ry && y < ry + rh) ? 1.0 : 0.0;
          break;
      }
      for (int c = 0; c < spec.channels; ++c) img.at(c, y, x) = gain[c] * f + bias[c];
    }
  }
  return img;
}

bool has_variance(const Image& img) {
  for (double v : img.data) {
    if (v != img.data.front()) return true;
  }
  return false;
}

}  // namespace

std::vector<Image> gen_synthetic_images(std::uint64_t seed, int n, const SyntheticSpec& spec) {
  if (n < 1) throw InvalidInput("gen_synthetic_images: n must be >= 1");
  if (!(spec.min_period > 0) || !(spec.max_period >= spec.min_period)) {
    throw InvalidInput("gen_synthetic_images: need 0 < min_period <= max_period");
  }
  if (spec.kinds.empty()) throw InvalidInput("gen_synthetic_images: no pattern kinds selected");
  if (spec.min_rect_side < 1 || spec.max_rect_side < 0) {
    throw InvalidInput("gen_synthetic_images: rectangle sides must be positive");
  }
  if (spec.channels < 1 || spec.height < 2 || spec.width < 2) {
    throw InvalidInput("gen_synthetic_images: image must have a channel and at least 2x2 pixels");
  }
  Rng rng = Rng::for_purpose(seed, "data");
  std::vector<Image> out;
  out.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(out.size()) < n) {
    Image img = render(rng, spec);
    // A rectangle covering the whole canvas would be flat; draw again.
    if (!has_variance(img)) continue;
    normalize_image(img);
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace et::io
