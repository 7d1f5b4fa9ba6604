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

#include "et/io/image.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "et/io/format.hpp"

namespace et::io {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads a decimal field.
  long number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (start == pos_) throw FormatError(std::string("pnm: missing ") + what);
    long value = 0;
    const auto res = std::from_chars(bytes_.data() + start, bytes_.data() + pos_, value);
    if (res.ec != std::errc{}) throw FormatError(std::string("pnm: bad ") + what);
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError("pnm: truncated header");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 2;
};

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".scale");
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

Image8 parse_pnm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError("pnm: expected P5 or P6 magic");
  }
  HeaderReader header(bytes);
  Image8 img;
  img.channels = bytes[1] == '6' ? 3 : 1;
  const long width = header.number("width");
  const long height = header.number("height");
  const long maxval = header.number("maxval");
  if (width < 1 || height < 1) throw FormatError("pnm: dimensions must be positive");
  if (maxval != 255) throw FormatError("pnm: unsupported maxval " + std::to_string(maxval) + " (only 255)");
  const std::size_t start = header.raster_start();
  const std::size_t expected = std::size_t(width) * std::size_t(height) * std::size_t(img.channels);
  const std::size_t available = bytes.size() - std::min(bytes.size(), start);
  if (available < expected) throw FormatError("pnm: truncated raster");
  if (available > expected) throw FormatError("pnm: trailing bytes after raster (dimensions mismatch)");
  img.width = static_cast<int>(width);
  img.height = static_cast<int>(height);
  img.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start), bytes.end());
  return img;
}

std::string encode_pnm(const Image8& image) {
  if (image.channels != 1 && image.channels != 3) throw FormatError("pnm: only 1 or 3 channels");
  if (image.data.size() != std::size_t(image.width) * image.height * image.channels) {
    throw ShapeError("pnm: pixel buffer does not match dimensions");
  }
  std::string out = (image.channels == 3 ? "P6\n" : "P5\n") + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  out.append(image.data.begin(), image.data.end());
  return out;
}

Image8 load_ppm(const std::filesystem::path& path) { return parse_pnm(read_file(path)); }

void save_ppm(const std::filesystem::path& path, const Image8& image) { write_file(path, encode_pnm(image)); }

PixelScale fit_scale(const Image& image) {
  if (image.data.empty()) return {};
  const auto [lo, hi] = std::minmax_element(image.data.begin(), image.data.end());
  const double span = *hi - *lo;
  return {*lo, span > 0 ? span : 1.0};
}

Image8 quantize(const Image& image, const PixelScale& s) {
  Image8 out{image.channels, image.height, image.width, {}};
  out.data.resize(image.data.size());
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        const double unit = std::clamp((image.at(c, y, x) - s.offset) / s.scale, 0.0, 1.0);
        out.data[(std::size_t(y) * image.width + x) * image.channels + c] =
            static_cast<std::uint8_t>(std::lround(unit * 255.0));
      }
    }
  }
  return out;
}

Image dequantize(const Image8& image, const PixelScale& s) {
  Image out(image.channels, image.height, image.width);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        const double byte = image.data[(std::size_t(y) * image.width + x) * image.channels + c];
        out.at(c, y, x) = s.offset + s.scale * byte / 255.0;
      }
    }
  }
  return out;
}

void save_image(const std::filesystem::path& path, const Image& image) {
  const PixelScale s = fit_scale(image);
  save_ppm(path, quantize(image, s));
  write_file(sidecar_path(path), format_double(s.offset) + " " + format_double(s.scale) + "\n");
}

Image load_image(const std::filesystem::path& path) {
  const Image8 raw = load_ppm(path);
  PixelScale s;
  if (std::filesystem::exists(sidecar_path(path))) {
    std::istringstream in(read_file(sidecar_path(path)));
    if (!(in >> s.offset >> s.scale)) throw FormatError("malformed scale sidecar for " + path.string());
  }
  return dequantize(raw, s);
}

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::filesystem::path> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t");
    out.push_back(path.parent_path() / line.substr(first, last - first + 1));
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<std::string>& entries) {
  std::string text = "# one image per line, relative to this file\n";
  for (const auto& e : entries) text += e + "\n";
  write_file(path, text);
}

}  // namespace et::io
