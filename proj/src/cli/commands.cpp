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

#include "et/cli/commands.hpp"

#include <cstdio>
#include <ostream>

#include "et/cli/verify.hpp"
#include "et/image/export.hpp"
#include "et/io/checkpoint.hpp"
#include "et/io/format.hpp"
#include "et/io/image.hpp"

namespace et::cli {

namespace fs = std::filesystem;
using io::format_double;

namespace {

std::ostream& log_of(CommandContext& ctx) { return *ctx.log; }

fs::path out_dir(const CommandContext& ctx, const char* command) {
  const std::string out = ctx.config.get("out");
  if (out.empty()) throw ConfigError(std::string(command) + " needs an output directory (--out)");
  fs::create_directories(out);
  return out;
}

// Checkpoint to read: the `checkpoint` key, required.
io::Checkpoint input_checkpoint(const CommandContext& ctx, const char* command) {
  const std::string path = ctx.config.get("checkpoint");
  if (path.empty()) throw ConfigError(std::string(command) + " needs --checkpoint");
  return io::load_checkpoint(path);
}

// Checkpoint to write: the `checkpoint` key if set, else <out>/checkpoint.etck.
fs::path output_checkpoint(const CommandContext& ctx, const fs::path& out) {
  const std::string path = ctx.config.get("checkpoint");
  return path.empty() ? out / "checkpoint.etck" : fs::path(path);
}

// Writes to <out>/<name> when an output directory is configured, else to the report stream.
void emit(CommandContext& ctx, const std::string& name, const std::string& text) {
  const std::string out = ctx.config.get("out");
  if (out.empty()) {
    *ctx.report << text;
    return;
  }
  fs::create_directories(out);
  io::write_file(fs::path(out) / name, text);
  log_of(ctx) << "wrote " << (fs::path(out) / name).string() << "\n";
}

void log_config(CommandContext& ctx, const std::string& command) {
  const std::string resolved = ctx.config.resolved();
  log_of(ctx) << "# " << command << " resolved config\n" << resolved;
  const std::string out = ctx.config.get("out");
  if (!out.empty()) {
    fs::create_directories(out);
    io::write_file(fs::path(out) / "config.txt", resolved);
  }
}

std::vector<io::Image> load_image_set(const std::string& manifest, const image::ImageModelConfig& m) {
  std::vector<io::Image> images;
  for (const auto& path : io::read_manifest(manifest)) {
    io::Image img = io::load_image(path);
    if (img.channels != m.channels || img.height != m.height || img.width != m.width) {
      throw ShapeError("dataset: " + path.string() + " is " + std::to_string(img.channels) + "x" +
                       std::to_string(img.height) + "x" + std::to_string(img.width) + ", config expects " +
                       std::to_string(m.channels) + "x" + std::to_string(m.height) + "x" + std::to_string(m.width));
    }
    images.push_back(std::move(img));
  }
  if (images.empty()) throw InvalidInput("dataset: manifest " + manifest + " lists no images");
  return images;
}

int positive_count(const RunConfig& c, const char* key) {
  const long long v = c.get_int(key);
  if (v < 1 || v > 10'000'000) throw ConfigError(std::string("config: '") + key + "' must be positive");
  return int(v);
}

std::vector<io::Image> training_images(const RunConfig& c) {
  const auto m = c.image_model();
  if (!c.get("data").empty()) return load_image_set(c.get("data"), m);
  return io::gen_synthetic_images(c.get_u64("data_seed"), positive_count(c, "n_images"), c.synthetic_spec());
}

// Held-out images: eval_data if set, else a synthetic set from the next data seed.
std::vector<io::Image> eval_images(const RunConfig& c) {
  const auto m = c.image_model();
  if (!c.get("eval_data").empty()) return load_image_set(c.get("eval_data"), m);
  return io::gen_synthetic_images(c.get_u64("data_seed") + 1, positive_count(c, "n_eval"), c.synthetic_spec());
}

graph::GraphInstance graph_data(const RunConfig& c, const fs::path& override_dir = {}) {
  const fs::path dir = !override_dir.empty() ? override_dir : fs::path(c.get("data"));
  if (!dir.empty()) return graph::load_graph(dir / "edges.tsv", dir / "features.csv", dir / "labels.txt");
  const long long nodes = c.get_int("nodes");
  if (nodes < 2) throw ConfigError("config: nodes must be >= 2");
  return graph::gen_planted_anomaly_graph(c.get_u64("data_seed"), nodes, c.get_double("anomaly_rate"),
                                          c.get_double("shift"), c.planted_spec());
}

bool is_image_checkpoint(const io::Checkpoint& ckpt) { return ckpt.contains("decoder.kernel"); }

std::string energy_csv(const std::vector<EnergyBreakdown<double>>& energies) {
  std::string out = "step,energy_att,energy_hn,energy_total\n";
  for (std::size_t t = 0; t < energies.size(); ++t) {
    out += std::to_string(t) + "," + format_double(energies[t].e_att) + "," + format_double(energies[t].e_hn) + "," +
           format_double(energies[t].e_total) + "\n";
  }
  return out;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"verify-grad",   "train",         "eval",
                                              "dump-energy",   "export-weights", "gen-data"};
  return names;
}

int cmd_verify_grad(CommandContext& ctx) {
  const RunConfig& c = ctx.config;
  log_config(ctx, "verify-grad");
  GradCheckOptions o;
  o.instances = positive_count(c, "instances");
  o.tolerance = c.get_double("tolerance");
  o.fd_step = c.get_double("fd_step");
  o.seed = c.seed();
  o.image_activation = parse_activation(c.get("activation"));
  o.inject_fault = c.get("inject_fault");
  const GradCheckReport report = run_grad_checks(o);
  emit(ctx, "verify_grad.csv", grad_report_csv(report));
  for (const auto& t : report.tensors) {
    if (!t.passed) {
      log_of(ctx) << "FAIL: gradient of " << display_name(t.name) << ": relative error " << format_double(t.worst)
                  << " > tolerance " << format_double(o.tolerance) << " at instance seed " << t.worst_seed << "\n";
    }
  }
  const bool ok = report.passed();
  log_of(ctx) << "verify-grad: " << (ok ? "all checks passed" : "FAILED") << "\n";
  return ok ? kOk : kFailure;
}

int cmd_train(CommandContext& ctx) {
  const RunConfig& c = ctx.config;
  log_config(ctx, "train");
  const fs::path out = out_dir(ctx, "train");
  if (c.task() == Task::Image) {
    // Everything that can be rejected is checked before the first step.
    const auto model = c.image_model();
    const auto config = c.image_train();
    const auto images = training_images(c);
    log_of(ctx) << "train: " << images.size() << " images, " << config.epochs << " epochs\n";
    const auto result = image::train_image(model, images, config, [&](const image::EpochRecord& e) {
      log_of(ctx) << "epoch " << e.epoch << " loss " << format_double(e.loss) << "\n";
    });
    std::string csv = "epoch,loss\n";
    for (const auto& e : result.epochs) csv += std::to_string(e.epoch) + "," + format_double(e.loss) + "\n";
    io::write_file(out / "metrics.csv", csv);
    io::save_checkpoint(output_checkpoint(ctx, out), image::to_checkpoint(result.params));
  } else {
    const auto model = c.graph_model();
    const auto config = c.graph_train();
    const int n_seeds = positive_count(c, "n_seeds");
    const auto g = graph_data(c);
    log_of(ctx) << "train: graph with " << g.n_nodes() << " nodes, " << n_seeds << " seeds, " << config.epochs
                << " epochs\n";
    graph::GraphTrainResult first;
    const auto report = graph::run_graph_seeds(g, model, config, n_seeds, &first);
    io::write_file(out / "metrics.csv", graph::metrics_csv(report));
    io::write_file(out / "history.csv", graph::history_csv(first.history));
    io::save_checkpoint(output_checkpoint(ctx, out), graph::to_checkpoint(first.params));
    log_of(ctx) << "test macro_f1 " << format_double(report.test_mean.macro_f1) << " +- "
                << format_double(report.test_std.macro_f1) << ", auc " << format_double(report.test_mean.auc)
                << " +- " << format_double(report.test_std.auc) << "\n";
  }
  log_of(ctx) << "wrote " << out.string() << "\n";
  return kOk;
}

int cmd_eval(CommandContext& ctx) {
  const RunConfig& c = ctx.config;
  log_config(ctx, "eval");
  const io::Checkpoint ckpt = input_checkpoint(ctx, "eval");
  if (c.task() == Task::Image) {
    if (!is_image_checkpoint(ckpt)) throw InvalidInput("eval: task=image but the checkpoint is not an image model");
    const auto model = c.image_model();
    const auto train = c.image_train();
    const auto params = image::from_checkpoint(model, ckpt);
    const auto images = eval_images(c);
    const double mse = image::evaluate_image(params, images, train.n_occluded, train.n_replaced, c.get_u64("eval_seed"));
    emit(ctx, "eval.csv", "metric,value\nmasked_mse," + format_double(mse) + "\n");
  } else {
    if (is_image_checkpoint(ckpt)) throw InvalidInput("eval: task=graph but the checkpoint is an image model");
    const auto g = graph_data(c, ctx.input);
    const auto params = graph::from_checkpoint(c.graph_model(), g, ckpt);
    const auto split = graph::make_split(g.labels, c.get_double("train_ratio"), c.seed());
    const auto probs = graph::graph_forward(g, params);
    std::string csv = "split,macro_f1,auc\n";
    for (const auto& [name, idx] : {std::pair{"valid", &split.valid}, std::pair{"test", &split.test}}) {
      const auto m = graph::evaluate_split(probs, g.labels, *idx);
      csv += std::string(name) + "," + format_double(m.macro_f1) + "," + format_double(m.auc) + "\n";
    }
    emit(ctx, "eval.csv", csv);
  }
  return kOk;
}

int cmd_dump_energy(CommandContext& ctx) {
  const RunConfig& c = ctx.config;
  log_config(ctx, "dump-energy");
  const io::Checkpoint ckpt = input_checkpoint(ctx, "dump-energy");
  if (c.task() == Task::Image) {
    if (!is_image_checkpoint(ckpt)) throw InvalidInput("dump-energy: task=image but the checkpoint is not an image model");
    const auto model = c.image_model();
    const auto train = c.image_train();
    const auto params = image::from_checkpoint(model, ckpt);
    const io::Image img = ctx.input.empty() ? eval_images(c).front() : io::load_image(ctx.input);
    io::Rng rng = io::Rng::for_purpose(c.get_u64("eval_seed"), "eval-mask");
    const auto plan = image::make_mask_plan(model.tokens(), train.n_occluded, train.n_replaced, rng);
    emit(ctx, "energy.csv", energy_csv(image::reconstruct(img, plan, params).energies));
  } else {
    if (is_image_checkpoint(ckpt)) throw InvalidInput("dump-energy: task=graph but the checkpoint is an image model");
    const auto g = graph_data(c, ctx.input);
    const auto params = graph::from_checkpoint(c.graph_model(), g, ckpt);
    const auto traj = et_forward(graph::embed_nodes(g, params), params.et, params.config.alpha, params.config.steps);
    std::vector<EnergyBreakdown<double>> energies;
    for (const auto& point : traj) energies.push_back(point.energy);
    emit(ctx, "energy.csv", energy_csv(energies));
  }
  return kOk;
}

int cmd_export_weights(CommandContext& ctx) {
  const RunConfig& c = ctx.config;
  log_config(ctx, "export-weights");
  if (c.task() != Task::Image) throw ConfigError("export-weights: only image-task weights decode to patches");
  const fs::path out = out_dir(ctx, "export-weights");
  const io::Checkpoint ckpt = input_checkpoint(ctx, "export-weights");
  if (!is_image_checkpoint(ckpt)) throw InvalidInput("export-weights: the checkpoint is not an image-task checkpoint");
  const auto which = image::parse_weight_kind(ctx.which);
  const auto params = image::from_checkpoint(c.image_model(), ckpt);
  const auto grid = image::export_weights_as_patches(params, which);
  const auto paths = image::write_patch_images(grid, out, image::weight_prefix(which));
  log_of(ctx) << "export-weights: wrote " << paths.size() << " images to " << out.string() << "\n";
  return kOk;
}

int cmd_gen_data(CommandContext& ctx) {
  const RunConfig& c = ctx.config;
  log_config(ctx, "gen-data");
  const fs::path out = out_dir(ctx, "gen-data");
  if (c.task() == Task::Image) {
    const auto images =
        io::gen_synthetic_images(c.get_u64("data_seed"), positive_count(c, "n_images"), c.synthetic_spec());
    std::vector<std::string> entries;
    const char* ext = c.image_model().channels == 3 ? "ppm" : "pgm";
    for (std::size_t i = 0; i < images.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "img_%05zu.%s", i, ext);
      io::save_image(out / name, images[i]);
      entries.emplace_back(name);
    }
    io::write_manifest(out / "manifest.txt", entries);
    log_of(ctx) << "gen-data: " << images.size() << " images and manifest.txt in " << out.string() << "\n";
  } else {
    const auto g = graph_data(c);
    graph::save_graph(g, out);
    log_of(ctx) << "gen-data: graph with " << g.n_nodes() << " nodes in " << out.string() << "\n";
  }
  return kOk;
}

int run_command(const std::string& name, CommandContext& ctx) {
  try {
    if (name == "verify-grad") return cmd_verify_grad(ctx);
    if (name == "train") return cmd_train(ctx);
    if (name == "eval") return cmd_eval(ctx);
    if (name == "dump-energy") return cmd_dump_energy(ctx);
    if (name == "export-weights") return cmd_export_weights(ctx);
    if (name == "gen-data") return cmd_gen_data(ctx);
    log_of(ctx) << "error: unknown command '" << name << "'\n";
    return kUsage;
  } catch (const DivergenceError& e) {
    log_of(ctx) << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const Error& e) {
    log_of(ctx) << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    log_of(ctx) << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace et::cli
