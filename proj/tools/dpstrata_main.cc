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

// dpstrata: optimal stratified sample allocation under local DP.
//
//   dpstrata design --config configs/four_groups.cfg
//   dpstrata compare --config configs/four_groups.cfg --out four_groups.csv

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dpstrata/commands.h"
#include "dpstrata/config.h"

namespace {

struct Flags {
  std::string config_path;
  std::string out_path;
  int threads = 1;
  std::string lambda_mode;
  std::optional<double> gap_threshold;
};

bool WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  return static_cast<bool>(out);
}

int Run(dpstrata::Command command, const Flags& flags) {
  absl::StatusOr<dpstrata::RunConfig> config =
      dpstrata::LoadRunConfig(flags.config_path);
  if (!config.ok()) {
    std::cerr << "config error: " << config.status().message() << "\n";
    return dpstrata::kExitConfigError;
  }
  dpstrata::CommandOptions options;
  options.threads = flags.threads;
  options.gap_threshold = flags.gap_threshold;
  if (!flags.lambda_mode.empty()) {
    absl::StatusOr<dpstrata::LambdaMode> mode =
        dpstrata::ParseLambdaMode(flags.lambda_mode);
    if (!mode.ok()) {
      std::cerr << "config error: --lambda-mode: " << mode.status().message()
                << "\n";
      return dpstrata::kExitConfigError;
    }
    options.lambda_mode = *mode;
  }

  const dpstrata::CommandResult result =
      dpstrata::RunCommand(command, *config, options);
  const std::string out_path =
      flags.out_path.empty() ? config->output_path : flags.out_path;
  if (!out_path.empty() && !result.csv.empty()) {
    if (!WriteFile(out_path, result.csv)) {
      std::cerr << "cannot write " << out_path << "\n";
      return dpstrata::kExitSolverError;
    }
    std::cout << result.report;
  } else if (command == dpstrata::Command::kDesign) {
    std::cout << result.report;
  } else {
    std::cout << result.csv;
    std::cerr << result.report;
  }
  if (result.exit_code != dpstrata::kExitOk) {
    std::cerr << (result.exit_code == dpstrata::kExitConfigError
                      ? "config error: "
                      : "error: ")
              << result.error << "\n";
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variance-optimal stratified sampling under local differential "
               "privacy"};
  app.require_subcommand(1);
  Flags flags;
  std::optional<dpstrata::Command> chosen;

  for (dpstrata::Command command :
       {dpstrata::Command::kDesign, dpstrata::Command::kCompare,
        dpstrata::Command::kSimulate, dpstrata::Command::kSweep,
        dpstrata::Command::kBench}) {
    static const char* const kHelp[] = {
        "continuous and integer-optimal design for one problem",
        "variance ratio of rounded Neyman vs optimal design per epsilon",
        "Monte-Carlo check of the estimator variance",
        "per-group designs across an epsilon grid",
        "timing of the ball search against exhaustive search",
    };
    CLI::App* sub = app.add_subcommand(dpstrata::CommandName(command),
                                       kHelp[static_cast<int>(command)]);
    sub->add_option("--config", flags.config_path, "run configuration file")
        ->required();
    sub->add_option("--out", flags.out_path, "CSV output path");
    sub->add_option("--threads", flags.threads, "worker threads")
        ->check(CLI::PositiveNumber);
    sub->add_option("--lambda-mode", flags.lambda_mode,
                    "curvature bound: paper or conservative");
    sub->add_option("--gap-threshold", flags.gap_threshold,
                    "accept the rounded design if its relative gap is below "
                    "this")
        ->check(CLI::NonNegativeNumber);
    sub->final_callback([&chosen, command] { chosen = command; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dpstrata::kExitConfigError;
  }
  return Run(*chosen, flags);
}
