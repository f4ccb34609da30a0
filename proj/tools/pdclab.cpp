// Copyright 2026 The pdclab Authors
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

// pdclab: scenario runner for the parametric down-conversion toolkit.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pdc/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Scenario runner for degenerate parametric down-conversion metrology"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir = ".";
  unsigned threads = 1;
  bool strict = true;

  auto* run = app.add_subcommand("run", "Run the tasks of a scenario file");
  run->add_option("config", config, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--out-dir", out_dir, "Directory for CSV and JSON results");
  run->add_option("--threads", threads, "Worker threads for sweeps")->check(CLI::Range(1u, 1024u));
  run->add_flag("--strict,!--no-strict", strict, "Reject unknown config keys (default on)");

  auto* list = app.add_subcommand("list-tasks", "List the available task tags");
  auto* defaults = app.add_subcommand("print-defaults", "Print a scenario file with every default value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pdc::cli::kConfigError;
  }

  if (*list) {
    for (auto t : pdc::cli::all_tasks()) std::cout << pdc::cli::to_string(t) << "\t" << pdc::cli::describe(t) << "\n";
    return 0;
  }
  if (*defaults) {
    std::cout << pdc::cli::default_config();
    return 0;
  }
  pdc::cli::RunOptions opt;
  opt.out_dir = out_dir;
  opt.threads = threads;
  return pdc::cli::run(config, strict, opt, std::cout, std::cerr);
}
