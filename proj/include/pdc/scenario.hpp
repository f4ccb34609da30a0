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

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pdc/dynamics.hpp"

namespace pdc::cli {

enum class Task { steady_moments, qfi, uncertainty, meanfield, gap, fig2, sensor };

const std::vector<Task>& all_tasks();
const char* to_string(Task t);
const char* describe(Task t);
std::optional<Task> parse_task(const std::string& name);

struct Truncation {
  std::size_t signal = 40;
  std::size_t pump = 15;
  std::size_t max_signal = 200;
  std::size_t step = 10;
  bool automatic = true;
};

struct RunTolerances {
  Tolerances ode;
  double steady = 1e-10;
  double compare = 1e-2;
  double floor = 1e-12;
  double population = 1e-8;
  double eigen_floor = 1e-15;
  double fd_step = 0.0;  // 0 picks the metrology default
};

struct Sweep {
  std::string param;
  std::vector<double> values;
};

struct Scenario {
  std::string name = "scenario";
  SystemParams params;
  std::optional<Sweep> sweep;
  std::vector<Task> tasks;
  Truncation truncation;
  RunTolerances tolerances;
  double phi = 0.0;            // homodyne quadrature angle
  bool full_model = false;     // meanfield task also solves the two-mode model

  void validate() const;
  std::vector<double> grid() const;  // sweep values, or the single base value
  std::string grid_param() const;
  SystemParams at(double value) const;
};

// Throws ConfigError. In non-strict mode unknown keys are returned in `ignored`.
Scenario parse_scenario(std::istream& in, bool strict = true, std::vector<std::string>* ignored = nullptr);
Scenario load_scenario(const std::filesystem::path& path, bool strict = true,
                       std::vector<std::string>* ignored = nullptr);
std::string default_config();

void set_param(SystemParams& p, const std::string& name, double value);
double get_param(const SystemParams& p, const std::string& name);

struct ComparisonRow {
  std::string quantity;
  double analytic;
  double numeric;
  double rel_dev;
  double tolerance;
  bool pass;
};

// rel_dev = |analytic - numeric| / max(|analytic|, floor); two equal infinities count as agreement.
ComparisonRow compare(std::string quantity, double analytic, double numeric, double tolerance, double floor);

using Cell = std::variant<double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct TaskOutput {
  Task task;
  Table table;
  std::vector<ComparisonRow> rows;
};

// Fixed-width text table; throws InvalidArgument on empty input.
std::string format_report(const std::vector<ComparisonRow>& rows);
// Versioned JSON document of the rows; throws InvalidArgument on empty input.
std::string report_json(const std::vector<ComparisonRow>& rows, const Scenario& s);
bool all_pass(const std::vector<ComparisonRow>& rows);

std::string to_csv(const Table& t);

struct RunOptions {
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;
};

TaskOutput run_task(Task task, const Scenario& s, unsigned threads = 1);

enum ExitCode { kPass = 0, kToleranceFailure = 1, kConfigError = 2, kSolverFailure = 3 };

// Runs every task, writes <name>_<task>.csv/.json and <name>_summary.csv/.json, returns the exit code.
int run(const Scenario& s, const RunOptions& opt, std::ostream& out, std::ostream& err);
int run(const std::filesystem::path& config, bool strict, const RunOptions& opt, std::ostream& out,
        std::ostream& err);

}  // namespace pdc::cli
