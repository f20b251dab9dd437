// Copyright 2026 The qtraj Authors
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

// qtraj <master|trajectory|ensemble|oracle-check> --config <path>
//       [--seed S] [--out DIR] [--parallelism P]
//
// Exit codes: 0 ok, 1 config error, 2 runtime error, 3 oracle-check failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qtraj/error.hpp"
#include "qtraj/experiments.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qtraj: quantum filters and master equations for open systems"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<unsigned> parallelism;

  const struct {
    const char* name;
    const char* help;
    int (*run)(const qtraj::ExperimentConfig&, std::ostream&);
  } commands[] = {
      {"master", "Integrate the unconditional master equation / hierarchy", qtraj::command_master},
      {"trajectory", "Simulate one conditional trajectory", qtraj::command_trajectory},
      {"ensemble", "Simulate an ensemble of trajectories", qtraj::command_ensemble},
      {"oracle-check", "Compare the hierarchy with the extended-system master equation",
       qtraj::command_oracle_check},
  };

  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "Experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "Override the base seed");
    sub->add_option("--out", out_dir, "Override the output directory");
    sub->add_option("--parallelism", parallelism, "Worker threads for ensembles")
        ->check(CLI::Range(1u, 1024u));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  for (const auto& c : commands) {
    if (!app.got_subcommand(c.name)) continue;
    try {
      std::vector<std::string> warnings;
      qtraj::ExperimentConfig cfg = qtraj::load_config(config_path, &warnings);
      cfg = qtraj::apply_overrides(std::move(cfg), {seed, out_dir, parallelism});
      return c.run(cfg, std::cout);
    } catch (const qtraj::ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitRuntime;
    }
  }
  return kExitRuntime;
}
