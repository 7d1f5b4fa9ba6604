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

#include "et/cli/run_config.hpp"

#include <charconv>
#include <cmath>

#include "et/io/format.hpp"
#include "et/io/image.hpp"

namespace et::cli {

namespace {

struct KeySpec {
  const char* name;
  const char* image_default;
  const char* graph_default;
};

// Resolution order of the printed config. "auto" values are derived from
// other keys when read.
constexpr KeySpec kKeys[] = {
    {"task", "image", "graph"},
    {"seed", "0", "0"},
    // geometry (image)
    {"channels", "1", "1"},
    {"height", "32", "32"},
    {"width", "32", "32"},
    {"patch", "8", "8"},
    {"N", "auto", "auto"},
    {"P", "auto", "auto"},
    // model
    {"D", "64", "32"},
    {"H", "4", "2"},
    {"Y", "16", "32"},
    {"M", "256", "64"},
    {"F", "8", "8"},
    {"hidden", "0", "0"},
    {"alpha", "0.1", "1"},
    {"T", "6", "2"},
    {"beta", "auto", "auto"},
    {"beta_learnable", "false", "true"},
    {"epsilon", "1e-05", "1e-05"},
    {"init_std", "0.02", "0.02"},
    {"mask_mode", "exclude_self", "graph"},
    {"allow_self_attention", "false", "false"},
    {"enable_attn", "true", "true"},
    {"enable_hopfield", "true", "true"},
    {"activation", "relu", "relu"},
    // optimizer
    {"lr", "0.0005", "0.001"},
    {"b1", "0.9", "0.9"},
    {"b2", "0.99", "0.99"},
    {"adam_eps", "1e-08", "1e-08"},
    {"weight_decay", "0.05", "0"},
    {"grad_clip", "1", "0"},
    {"warmup_steps", "0", "0"},
    {"max_steps", "0", "0"},
    {"epochs", "10", "100"},
    {"batch_size", "16", "16"},
    {"n_occluded", "8", "8"},
    {"n_replaced", "7", "7"},
    // data
    {"data", "", ""},
    {"eval_data", "", ""},
    {"data_seed", "100", "100"},
    {"n_images", "512", "512"},
    {"n_eval", "128", "128"},
    {"eval_seed", "1", "1"},
    {"nodes", "1000", "1000"},
    {"anomaly_rate", "0.05", "0.05"},
    {"shift", "2", "2"},
    {"communities", "4", "4"},
    {"train_ratio", "0.4", "0.4"},
    {"n_seeds", "5", "5"},
    // gradient verification
    {"tolerance", "1e-06", "1e-06"},
    {"instances", "20", "20"},
    {"fd_step", "1e-05", "1e-05"},
    {"inject_fault", "", ""},
    // outputs
    {"out", "", ""},
    {"checkpoint", "", ""},
};

const KeySpec* find_key(std::string_view name) {
  for (const auto& k : kKeys) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_as(const std::string& key, const std::string& text) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + text + "'");
  }
  return value;
}

}  // namespace

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig c;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (c.is_set(key)) throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    try {
      c.set(key, std::string(trim(line.substr(eq + 1))));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return parse(text);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!find_key(key)) throw ConfigError("unknown config key '" + key + "'");
  if (key == "task" && value != "image" && value != "graph") {
    throw ConfigError("config: task must be 'image' or 'graph', got '" + value + "'");
  }
  values_[key] = value;
}

void RunConfig::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
  set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))));
}

Task RunConfig::task() const {
  const auto it = values_.find("task");
  return it == values_.end() || it->second == "image" ? Task::Image : Task::Graph;
}

std::string RunConfig::get(const std::string& key) const {
  const KeySpec* spec = find_key(key);
  if (!spec) throw ConfigError("unknown config key '" + key + "'");
  if (const auto it = values_.find(key); it != values_.end()) return it->second;
  return task() == Task::Image ? spec->image_default : spec->graph_default;
}

double RunConfig::get_double(const std::string& key) const {
  const double v = parse_as<double>(key, get(key));
  if (!std::isfinite(v)) throw ConfigError("config: '" + key + "' must be finite");
  return v;
}

long long RunConfig::get_int(const std::string& key) const { return parse_as<long long>(key, get(key)); }

std::uint64_t RunConfig::get_u64(const std::string& key) const { return parse_as<std::uint64_t>(key, get(key)); }

bool RunConfig::get_bool(const std::string& key) const {
  const std::string v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: '" + key + "' expects true or false, got '" + v + "'");
}

std::string RunConfig::resolved() const {
  std::string out;
  for (const auto& k : kKeys) {
    std::string v = get(k.name);
    if (v == "auto") {
      if (std::string_view(k.name) == "beta") {
        v = io::format_double(1.0 / std::sqrt(get_double("Y")));
      } else if (task() == Task::Image && std::string_view(k.name) == "N") {
        v = std::to_string(image_model().tokens());
      } else if (task() == Task::Image && std::string_view(k.name) == "P") {
        v = std::to_string(image_model().patch_dim());
      }
    }
    out += std::string(k.name) + " = " + v + "\n";
  }
  return out;
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& k : kKeys) out.emplace_back(k.name);
  return out;
}

Activation parse_activation(const std::string& text) {
  if (text == "relu") return Relu{};
  if (text == "softmax") return Softmax{};
  if (text.rfind("power", 0) == 0) {
    // power or power:<order>
    if (text == "power") return Power{};
    if (text.size() > 6 && text[5] == ':') {
      const int order = parse_as<int>("activation", text.substr(6));
      if (order < 1) throw ConfigError("config: power order must be >= 1");
      return Power{order};
    }
  }
  if (text.rfind("softmax:", 0) == 0) {
    const double beta = parse_as<double>("activation", text.substr(8));
    if (!(beta > 0)) throw ConfigError("config: softmax beta must be positive");
    return Softmax{beta};
  }
  throw ConfigError("config: activation must be relu, power[:k] or softmax[:beta], got '" + text + "'");
}

std::string activation_name(const Activation& a) {
  if (std::holds_alternative<Relu>(a)) return "relu";
  if (const auto* p = std::get_if<Power>(&a)) return "power:" + std::to_string(p->order);
  return "softmax:" + io::format_double(std::get<Softmax>(a).beta);
}

namespace {

int checked_int(const RunConfig& c, const std::string& key, long long lo) {
  const long long v = c.get_int(key);
  if (v < lo || v > 1'000'000'000) throw ConfigError("config: '" + key + "' out of range");
  return static_cast<int>(v);
}

}  // namespace

image::ImageModelConfig RunConfig::image_model() const {
  image::ImageModelConfig m;
  m.channels = checked_int(*this, "channels", 1);
  m.height = checked_int(*this, "height", 1);
  m.width = checked_int(*this, "width", 1);
  m.patch_h = m.patch_w = checked_int(*this, "patch", 1);
  m.token_dim = checked_int(*this, "D", 1);
  m.heads = checked_int(*this, "H", 1);
  m.head_dim = checked_int(*this, "Y", 1);
  m.memories = checked_int(*this, "M", 1);
  m.beta = get("beta") == "auto" ? 1.0 / std::sqrt(double(m.head_dim)) : get_double("beta");
  m.alpha = get_double("alpha");
  m.steps = checked_int(*this, "T", 0);
  m.epsilon = get_double("epsilon");
  m.init_std = get_double("init_std");
  m.enable_attn = get_bool("enable_attn");
  m.enable_hopfield = get_bool("enable_hopfield");
  m.activation = parse_activation(get("activation"));
  if (get_bool("beta_learnable")) throw ConfigError("config: beta_learnable is only supported for the graph task");

  const std::string mode = get("mask_mode");
  const bool allow_self = get_bool("allow_self_attention");
  if (mode == "graph") throw ConfigError("config: mask_mode=graph needs task=graph");
  if (mode != "exclude_self" && mode != "include_self") {
    throw ConfigError("config: mask_mode must be exclude_self, include_self or graph");
  }
  if (mode == "exclude_self" && allow_self && is_set("mask_mode")) {
    throw ConfigError("config: mask_mode=exclude_self contradicts allow_self_attention=true");
  }
  m.allow_self_attention = allow_self || mode == "include_self";
  m.validate();

  if (get("N") != "auto" && get_int("N") != m.tokens()) {
    throw ConfigError("config: N=" + get("N") + " but the image geometry gives " + std::to_string(m.tokens()));
  }
  if (get("P") != "auto" && get_int("P") != m.patch_dim()) {
    throw ConfigError("config: P=" + get("P") + " but the image geometry gives " + std::to_string(m.patch_dim()));
  }
  return m;
}

image::ImageTrainConfig RunConfig::image_train() const {
  image::ImageTrainConfig t;
  t.adam.lr = get_double("lr");
  t.adam.b1 = get_double("b1");
  t.adam.b2 = get_double("b2");
  t.adam.eps = get_double("adam_eps");
  t.adam.weight_decay = get_double("weight_decay");
  t.adam.grad_clip = get_double("grad_clip");
  t.epochs = checked_int(*this, "epochs", 0);
  t.batch_size = checked_int(*this, "batch_size", 1);
  t.n_occluded = checked_int(*this, "n_occluded", 0);
  t.n_replaced = checked_int(*this, "n_replaced", 0);
  t.warmup_steps = checked_int(*this, "warmup_steps", 0);
  t.max_steps = checked_int(*this, "max_steps", 0);
  t.seed = seed();
  t.validate(image_model().tokens());
  return t;
}

io::SyntheticSpec RunConfig::synthetic_spec() const {
  const auto m = image_model();
  io::SyntheticSpec s;
  s.channels = m.channels;
  s.height = m.height;
  s.width = m.width;
  return s;
}

graph::GraphModelConfig RunConfig::graph_model() const {
  graph::GraphModelConfig m;
  m.feature_dim = checked_int(*this, "F", 1);
  m.token_dim = checked_int(*this, "D", 1);
  m.heads = checked_int(*this, "H", 1);
  m.head_dim = checked_int(*this, "Y", 1);
  m.memories = checked_int(*this, "M", 1);
  m.hidden = checked_int(*this, "hidden", 0);
  m.beta = get("beta") == "auto" ? 0.0 : get_double("beta");
  if (get("beta") != "auto" && !(m.beta > 0)) throw ConfigError("config: beta must be positive");
  m.beta_learnable = get_bool("beta_learnable");
  m.alpha = get_double("alpha");
  m.steps = checked_int(*this, "T", 0);
  m.epsilon = get_double("epsilon");
  m.enable_attn = get_bool("enable_attn");
  m.enable_hopfield = get_bool("enable_hopfield");
  m.activation = parse_activation(get("activation"));
  if (get("mask_mode") != "graph") throw ConfigError("config: the graph task needs mask_mode=graph");
  m.self_loops = get_bool("allow_self_attention");
  m.validate();
  return m;
}

graph::GraphTrainConfig RunConfig::graph_train() const {
  graph::GraphTrainConfig t;
  t.adam.lr = get_double("lr");
  t.adam.b1 = get_double("b1");
  t.adam.b2 = get_double("b2");
  t.adam.eps = get_double("adam_eps");
  t.adam.weight_decay = get_double("weight_decay");
  t.adam.grad_clip = get_double("grad_clip");
  t.epochs = checked_int(*this, "epochs", 0);
  t.train_ratio = get_double("train_ratio");
  t.seed = seed();
  t.validate();
  return t;
}

graph::PlantedGraphSpec RunConfig::planted_spec() const {
  graph::PlantedGraphSpec s;
  s.communities = checked_int(*this, "communities", 2);
  s.feature_dim = checked_int(*this, "F", 1);
  return s;
}

}  // namespace et::cli
