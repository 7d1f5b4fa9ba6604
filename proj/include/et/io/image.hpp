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
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "et/common.hpp"

namespace et::io {

/// Real-valued image, planar channel-major (C x H x W).
struct Image {
  int channels = 1;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Image() = default;
  Image(int c, int h, int w) : channels(c), height(h), width(w), data(std::size_t(c) * h * w, 0.0) {}

  double& at(int c, int y, int x) { return data[(std::size_t(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(std::size_t(c) * height + y) * width + x]; }
  bool operator==(const Image&) const = default;
};

/// 8-bit image in file order (row-major, channels interleaved), 1 or 3 channels.
struct Image8 {
  int channels = 1;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  bool operator==(const Image8&) const = default;
};

/// Binary PGM (P5, 1 channel) / PPM (P6, 3 channels) with maxval 255. Header
/// comments are accepted; anything else malformed is rejected, including
/// trailing bytes after the payload.
Image8 parse_pnm(std::string_view bytes);
std::string encode_pnm(const Image8& image);

Image8 load_ppm(const std::filesystem::path& path);
void save_ppm(const std::filesystem::path& path, const Image8& image);

/// Affine map between stored bytes and real values: value = offset + scale * byte / 255.
struct PixelScale {
  double offset = 0.0;
  double scale = 1.0;
};

/// Range of the image, so quantization error is at most scale / 510.
PixelScale fit_scale(const Image& image);
Image8 quantize(const Image& image, const PixelScale& s);
Image dequantize(const Image8& image, const PixelScale& s);

/// Writes the PGM/PPM plus a `<path>.scale` sidecar holding the affine map.
void save_image(const std::filesystem::path& path, const Image& image);
/// Reads a PGM/PPM and applies its sidecar if present (identity byte/255 otherwise).
Image load_image(const std::filesystem::path& path);

/// Manifest: UTF-8 text, one path per line relative to the manifest's
/// directory; blank lines and `#` comments are skipped.
std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<std::string>& entries);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace et::io
