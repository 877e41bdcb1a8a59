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

#ifndef DPSTRATA_PROBLEM_H_
#define DPSTRATA_PROBLEM_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "dpstrata/mechanisms.h"

namespace dpstrata {

// Per-group weights alpha_i of the variance objective.
enum class WeightMode {
  kPopulationMean,  // alpha_i = N_i
  kAOptimal,        // alpha_i = 1
  kUnitFree,        // alpha_i = 1 / sigma_i
  kCustom,          // alpha_i supplied explicitly
};

// "population_mean", "a_optimal", "unit_free" or "custom".
std::string WeightModeName(WeightMode mode);
absl::StatusOr<WeightMode> ParseWeightMode(absl::string_view name);

// A complete stratified design problem: minimize
//   sum_i alpha_i^2 / n_i * (sigma_i^2 + gamma^2(n_i / N_i))
// subject to sum_i n_i = total_sample_size and 1 <= n_i <= N_i.
struct ProblemSpec {
  std::vector<int64_t> group_sizes;  // N_i
  std::vector<double> variances;     // sigma_i^2
  WeightMode weight_mode = WeightMode::kPopulationMean;
  std::vector<double> custom_weights;  // only for kCustom
  int64_t total_sample_size = 0;       // eta
  PrivacyParams privacy;
  MechanismKind mechanism = MechanismKind::kLaplace;

  int num_groups() const { return static_cast<int>(group_sizes.size()); }
  int64_t population_size() const;
  double weight(int i) const;

  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

// Checks every structural invariant; messages name the offending field.
absl::Status ValidateProblemSpec(const ProblemSpec& spec);

}  // namespace dpstrata

#endif  // DPSTRATA_PROBLEM_H_
