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

#include "dpstrata/problem.h"

#include <cmath>
#include <numeric>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"

namespace dpstrata {

std::string WeightModeName(WeightMode mode) {
  switch (mode) {
    case WeightMode::kPopulationMean:
      return "population_mean";
    case WeightMode::kAOptimal:
      return "a_optimal";
    case WeightMode::kUnitFree:
      return "unit_free";
    case WeightMode::kCustom:
      return "custom";
  }
  return "unknown";
}

absl::StatusOr<WeightMode> ParseWeightMode(absl::string_view name) {
  const std::string lower = absl::AsciiStrToLower(name);
  if (lower == "population_mean") return WeightMode::kPopulationMean;
  if (lower == "a_optimal") return WeightMode::kAOptimal;
  if (lower == "unit_free") return WeightMode::kUnitFree;
  if (lower == "custom") return WeightMode::kCustom;
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown weight mode '", name,
      "' (expected population_mean, a_optimal, unit_free or custom)"));
}

int64_t ProblemSpec::population_size() const {
  return std::accumulate(group_sizes.begin(), group_sizes.end(), int64_t{0});
}

double ProblemSpec::weight(int i) const {
  switch (weight_mode) {
    case WeightMode::kPopulationMean:
      return static_cast<double>(group_sizes[i]);
    case WeightMode::kAOptimal:
      return 1.0;
    case WeightMode::kUnitFree:
      return 1.0 / std::sqrt(variances[i]);
    case WeightMode::kCustom:
      return custom_weights[i];
  }
  return 1.0;
}

absl::Status ValidateProblemSpec(const ProblemSpec& spec) {
  const int k = spec.num_groups();
  if (k < 1) return absl::InvalidArgumentError("groups: need at least one group");
  if (spec.variances.size() != spec.group_sizes.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "sigma2: expected ", k, " group variances, got ",
        spec.variances.size()));
  }
  for (int i = 0; i < k; ++i) {
    if (spec.group_sizes[i] < 1) {
      return absl::InvalidArgumentError(absl::StrCat(
          "group.", i, ".size: must be >= 1, got ", spec.group_sizes[i]));
    }
    const double v = spec.variances[i];
    if (!std::isfinite(v) || v < 0) {
      return absl::InvalidArgumentError(absl::StrCat(
          "group.", i, ".sigma2: must be finite and >= 0, got ", v));
    }
    if (spec.weight_mode == WeightMode::kUnitFree && v <= 0) {
      return absl::InvalidArgumentError(absl::StrCat(
          "group.", i, ".sigma2: unit_free weights require sigma2 > 0"));
    }
  }
  if (spec.weight_mode == WeightMode::kCustom) {
    if (spec.custom_weights.size() != spec.group_sizes.size()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "alpha: custom weights need one value per group (", k, "), got ",
          spec.custom_weights.size()));
    }
    for (int i = 0; i < k; ++i) {
      const double a = spec.custom_weights[i];
      if (!std::isfinite(a) || a <= 0) {
        return absl::InvalidArgumentError(absl::StrCat(
            "group.", i, ".alpha: must be finite and positive, got ", a));
      }
    }
  }
  if (spec.total_sample_size < k) {
    return absl::InvalidArgumentError(absl::StrCat(
        "eta: total sample size must be >= k so every group gets a sample (k=",
        k, ", eta=", spec.total_sample_size, ")"));
  }
  if (spec.total_sample_size > spec.population_size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "eta: total sample size exceeds the population (sum N=",
        spec.population_size(), ", eta=", spec.total_sample_size, ")"));
  }
  if (absl::Status s = ValidatePrivacyParams(spec.privacy); !s.ok()) {
    return absl::InvalidArgumentError(absl::StrCat("privacy: ", s.message()));
  }
  return absl::OkStatus();
}

}  // namespace dpstrata
