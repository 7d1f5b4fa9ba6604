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
#include <random>
#include <vector>
#include <string_view>

#include "et/common.hpp"

namespace et::io {

/// Seeded 64-bit generator. Streams for different purposes (init, masking,
/// data, splits) are derived from one run seed so that drawing more numbers
/// for one purpose never shifts another.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng for_purpose(std::uint64_t seed, std::string_view purpose);

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  Index index(Index n) { return std::uniform_int_distribution<Index>(0, n - 1)(engine_); }

  Matrix normal_matrix(Index rows, Index cols, double stddev);

  /// Fisher-Yates with this generator, so the permutation is the same on every standard library.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (Index i = Index(v.size()) - 1; i > 0; --i) std::swap(v[std::size_t(i)], v[std::size_t(index(i + 1))]);
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::string_view purpose);

}  // namespace et::io
