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

// Flat key/value run configuration shared by the CLI commands.
//
//   # comments run to end of line
//   eta = 200
//   epsilon = 1
//   mechanism = laplace
//   group.0.size = 7000
//   group.0.sigma2 = 0.08
//   group.0.model = bernoulli:0.0877
//
// List values are comma separated. Groups are numbered from 0 without gaps.

#ifndef DPSTRATA_CONFIG_H_
#define DPSTRATA_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "dpstrata/integer_solver.h"
#include "dpstrata/mechanisms.h"
#include "dpstrata/problem.h"
#include "dpstrata/simulation.h"

namespace dpstrata {

struct RunConfig {
  ProblemSpec problem;
  // One entry per group; empty optionals when no model was given.
  std::vector<std::optional<GroupModel>> models;
  // Fixed design from group.<i>.n; empty when absent.
  std::vector<int64_t> design;

  std::vector<double> eps_grid;
  // Mechanisms to iterate over; empty means just problem.mechanism.
  std::vector<MechanismKind> mechanisms;
  int64_t reps = 100'000;
  std::optional<uint64_t> seed;
  bool zero_noise_for_testing = false;
  LambdaMode lambda_mode = LambdaMode::kConservative;
  std::optional<double> gap_threshold;
  std::string output_path;
  std::vector<int64_t> eta_grid;
  std::vector<BenchMethod> bench_methods;
  uint64_t exhaustive_budget = 10'000'000;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Parses and validates; errors name the offending line or field.
absl::StatusOr<RunConfig> ParseRunConfig(absl::string_view text);
absl::StatusOr<RunConfig> LoadRunConfig(const std::string& path);

// ParseRunConfig(RenderRunConfig(c)) == c for every valid c.
std::string RenderRunConfig(const RunConfig& config);

// The mechanisms list with the default applied.
std::vector<MechanismKind> EffectiveMechanisms(const RunConfig& config);

}  // namespace dpstrata

#endif  // DPSTRATA_CONFIG_H_
