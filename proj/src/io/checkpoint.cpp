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

#include "et/io/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "et/io/image.hpp"

namespace et::io {

namespace {

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) {
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    }
    pos_ += sizeof(U);
    return v;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("checkpoint: truncated while reading ") + what);
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

// Column-major storage index for row-major logical index k, treating every
// dimension but the last as rows.
std::vector<std::size_t> storage_order(const std::vector<Index>& dims) {
  Index total = 1;
  for (Index d : dims) total *= d;
  std::vector<std::size_t> order(static_cast<std::size_t>(total));
  if (dims.size() < 2) {
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    return order;
  }
  const Index cols = dims.back();
  const Index rows = cols == 0 ? 0 : total / cols;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) order[static_cast<std::size_t>(r * cols + c)] = static_cast<std::size_t>(c * rows + r);
  }
  return order;
}

}  // namespace

void Checkpoint::add(NamedTensor t) {
  std::uint64_t expected = 1;
  for (auto d : t.dims) expected *= d;
  if (expected != t.values.size()) throw ShapeError("checkpoint: value count does not match dims of " + t.name);
  if (contains(t.name)) throw FormatError("checkpoint: duplicate tensor " + t.name);
  tensors_.push_back(std::move(t));
}

bool Checkpoint::contains(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return true;
  }
  return false;
}

const NamedTensor& Checkpoint::get(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw FormatError("checkpoint: no tensor named '" + std::string(name) + "'");
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out = "ETCK";
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, ckpt.tensors().size());
  for (const auto& t : ckpt.tensors()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_le<std::uint64_t>(out, d);
    for (double v : t.values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(4, "magic") != "ETCK") throw FormatError("checkpoint: bad magic");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = in.get<std::uint64_t>("tensor count");
  Checkpoint ckpt;
  for (std::uint64_t k = 0; k < count; ++k) {
    NamedTensor t;
    const auto name_len = in.get<std::uint32_t>("name length");
    t.name = std::string(in.take(name_len, "name"));
    const auto rank = in.get<std::uint32_t>("rank");
    if (rank > 8) throw FormatError("checkpoint: implausible rank for " + t.name);
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      t.dims.push_back(in.get<std::uint64_t>("dims"));
      n *= t.dims.back();
    }
    if (n > bytes.size()) throw FormatError("checkpoint: truncated values of " + t.name);
    t.values.resize(n);
    for (auto& v : t.values) v = std::bit_cast<double>(in.get<std::uint64_t>("values"));
    ckpt.add(std::move(t));
  }
  if (!in.done()) throw FormatError("checkpoint: trailing bytes after last tensor");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

Checkpoint to_checkpoint(const std::vector<ad::ConstTensorView>& views) {
  Checkpoint ckpt;
  for (const auto& v : views) {
    NamedTensor t;
    t.name = v.name;
    for (Index d : v.dims) t.dims.push_back(static_cast<std::uint64_t>(d));
    const auto order = storage_order(v.dims);
    t.values.resize(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) t.values[k] = v.data[order[k]];
    ckpt.add(std::move(t));
  }
  return ckpt;
}

void restore(const Checkpoint& ckpt, const std::vector<ad::TensorView>& views) {
  for (const auto& v : views) {
    const NamedTensor& t = ckpt.get(v.name);
    bool same = t.dims.size() == v.dims.size();
    for (std::size_t k = 0; same && k < t.dims.size(); ++k) same = t.dims[k] == static_cast<std::uint64_t>(v.dims[k]);
    if (!same) {
      auto show = [](const auto& dims) {
        std::string s = "[";
        for (std::size_t k = 0; k < dims.size(); ++k) s += (k ? "," : "") + std::to_string(dims[k]);
        return s + "]";
      };
      throw ShapeError("checkpoint: tensor '" + v.name + "' has shape " + show(t.dims) + ", model expects " +
                       show(v.dims));
    }
  }
  for (const auto& v : views) {
    const NamedTensor& t = ckpt.get(v.name);
    const auto order = storage_order(v.dims);
    for (std::size_t k = 0; k < order.size(); ++k) v.data[order[k]] = t.values[k];
  }
}

}  // namespace et::io
