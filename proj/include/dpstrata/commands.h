// Copyright 2026 The dpstrata Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The CLI subcommands, separated from argument parsing so tests can drive
// them directly.

#ifndef DPSTRATA_COMMANDS_H_
#define DPSTRATA_COMMANDS_H_

#include <optional>
#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "dpstrata/config.h"
#include "dpstrata/integer_solver.h"

namespace dpstrata {

enum class Command { kDesign, kCompare, kSimulate, kSweep, kBench };
std::string CommandName(Command command);
absl::StatusOr<Command> ParseCommand(absl::string_view name);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitSolverError = 3;
inline constexpr int kExitBudgetRefused = 4;

struct CommandOptions {
  int threads = 1;
  // Overrides of the config values.
  std::optional<LambdaMode> lambda_mode;
  std::optional<double> gap_threshold;
};

struct CommandResult {
  int exit_code = kExitOk;
  std::string csv;     // machine-readable table, header first
  std::string report;  // human-readable summary
  std::string error;   // set when exit_code != 0
};

// Command-specific checks on top of ParseRunConfig, e.g. simulate needs a
// seed and a model for every group.
absl::Status ValidateForCommand(const RunConfig& config, Command command);

CommandResult RunCommand(Command command, const RunConfig& config,
                         const CommandOptions& options = {});

// Fixed CSV headers.
extern const char kDesignCsvHeader[];
extern const char kCompareCsvHeader[];
extern const char kSimulateCsvHeader[];
extern const char kSweepCsvHeader[];
extern const char kBenchCsvHeader[];

}  // namespace dpstrata

#endif  // DPSTRATA_COMMANDS_H_
