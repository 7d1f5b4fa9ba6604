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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "et/cli/run_config.hpp"

namespace et::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

/// Everything a subcommand needs. `out` and `checkpoint` come from the
/// config (flags are folded into it first, so the logged config is the one used).
struct CommandContext {
  RunConfig config;
  std::filesystem::path input;
  std::string which = "memories";
  std::ostream* report = nullptr;  // primary output (CSV when no --out is given)
  std::ostream* log = nullptr;     // resolved config, progress, errors
};

const std::vector<std::string>& command_names();

/// Runs one subcommand and maps errors to exit codes: verification failures
/// and divergence give 1, bad usage, configs or inputs give 2.
int run_command(const std::string& name, CommandContext& ctx);

int cmd_verify_grad(CommandContext& ctx);
int cmd_train(CommandContext& ctx);
int cmd_eval(CommandContext& ctx);
int cmd_dump_energy(CommandContext& ctx);
int cmd_export_weights(CommandContext& ctx);
int cmd_gen_data(CommandContext& ctx);

}  // namespace et::cli
