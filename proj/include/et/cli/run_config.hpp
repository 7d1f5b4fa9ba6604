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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "et/graph/model.hpp"
#include "et/graph/train.hpp"
#include "et/image/model.hpp"
#include "et/image/train.hpp"
#include "et/io/synthetic.hpp"

namespace et::cli {

enum class Task { Image, Graph };

/// Flat `key = value` run configuration. Only explicitly set keys are
/// stored; everything else resolves to the task's default, so the same file
/// can omit whatever it does not care about.
class RunConfig {
 public:
  /// One `key = value` per line; blank lines and `#` comments are skipped.
  /// Unknown keys, duplicates and malformed lines throw ConfigError.
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);

  /// Sets one key, validating the name (not the value) immediately.
  void set(const std::string& key, const std::string& value);
  /// Accepts `key=value`.
  void set_assignment(std::string_view assignment);
  bool is_set(const std::string& key) const { return values_.count(key) != 0; }

  Task task() const;
  std::uint64_t seed() const { return get_u64("seed"); }

  std::string get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Every known key with its effective value, in a fixed order.
  std::string resolved() const;

  image::ImageModelConfig image_model() const;
  image::ImageTrainConfig image_train() const;
  io::SyntheticSpec synthetic_spec() const;
  graph::GraphModelConfig graph_model() const;
  graph::GraphTrainConfig graph_train() const;
  graph::PlantedGraphSpec planted_spec() const;

  /// Names of all accepted keys.
  static std::vector<std::string> keys();

 private:
  std::map<std::string, std::string> values_;
};

Activation parse_activation(const std::string& text);
std::string activation_name(const Activation& a);

}  // namespace et::cli
