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

// et: command-line entry point. Parses flags, folds them into the run
// config and hands off to the command library.

#include <CLI11.hpp>

#include <iostream>

#include "et/cli/commands.hpp"

namespace {

struct Flags {
  std::string config;
  std::string seed;
  std::string out;
  std::string checkpoint;
  std::string input;
  std::string which = "memories";
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Run config file (key = value lines)");
  cmd->add_option("--seed", f.seed, "Run seed (overrides the config)");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--checkpoint", f.checkpoint, "Checkpoint to read (eval, dump-energy, export-weights) or write (train)");
  cmd->add_option("--set", f.sets, "Extra key=value config entries, applied last");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy Transformer: gradient checks, training, evaluation and export"};
  app.require_subcommand(1);
  Flags flags;

  std::vector<CLI::App*> cmds;
  cmds.push_back(app.add_subcommand("verify-grad", "Check analytic gradients against finite differences"));
  cmds.push_back(app.add_subcommand("train", "Train on the configured task and write checkpoint + metrics"));
  cmds.push_back(app.add_subcommand("eval", "Evaluate a checkpoint"));
  cmds.push_back(app.add_subcommand("dump-energy", "Write the energy trajectory of one input as CSV"));
  cmds.push_back(app.add_subcommand("export-weights", "Decode memories or attention weights to images"));
  cmds.push_back(app.add_subcommand("gen-data", "Write the synthetic dataset for the configured task"));
  for (auto* cmd : cmds) add_common(cmd, flags);
  cmds[2]->add_option("--input", flags.input, "Graph directory (graph task)");
  cmds[3]->add_option("--input", flags.input, "Image file (image task) or graph directory (graph task)");
  cmds[4]->add_option("--which", flags.which, "memories, keys or queries")->check(CLI::IsMember({"memories", "keys", "queries"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : et::cli::kUsage;
  }

  et::cli::CommandContext ctx;
  ctx.report = &std::cout;
  ctx.log = &std::cerr;
  ctx.input = flags.input;
  ctx.which = flags.which;
  try {
    if (!flags.config.empty()) ctx.config = et::cli::RunConfig::load(flags.config);
    if (!flags.seed.empty()) ctx.config.set("seed", flags.seed);
    if (!flags.out.empty()) ctx.config.set("out", flags.out);
    if (!flags.checkpoint.empty()) ctx.config.set("checkpoint", flags.checkpoint);
    for (const auto& s : flags.sets) ctx.config.set_assignment(s);
    ctx.config.seed();  // reject a malformed --seed before anything runs
  } catch (const et::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return et::cli::kUsage;
  }
  return et::cli::run_command(app.get_subcommands().front()->get_name(), ctx);
}
