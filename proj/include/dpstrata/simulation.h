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

// Monte-Carlo validation of the privatize-and-estimate pipeline, and the
// epsilon sweep / integer-search benchmark tables.

#ifndef DPSTRATA_SIMULATION_H_
#define DPSTRATA_SIMULATION_H_

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "dpstrata/continuous_solver.h"
#include "dpstrata/integer_solver.h"
#include "dpstrata/objective.h"
#include "dpstrata/problem.h"
#include "dpstrata/random.h"

namespace dpstrata {

struct Bernoulli {
  double p = 0.5;
  friend bool operator==(const Bernoulli&, const Bernoulli&) = default;
};
struct UniformRange {
  double a = 0.0;
  double b = 1.0;
  friend bool operator==(const UniformRange&, const UniformRange&) = default;
};
struct PointMass {
  double mu = 0.0;
  friend bool operator==(const PointMass&, const PointMass&) = default;
};

// Bounded-support generator for the responses of one group.
using GroupModel = std::variant<Bernoulli, UniformRange, PointMass>;

absl::Status ValidateGroupModel(const GroupModel& model);
double ModelMean(const GroupModel& model);
double ModelVariance(const GroupModel& model);
double SampleModel(const GroupModel& model, RandomStream& stream);

// Bernoulli(p) with p(1 - p) = sigma2 and p <= 1/2. Needs sigma2 <= 1/4.
absl::StatusOr<GroupModel> BernoulliWithVariance(double sigma2);

// "bernoulli:p", "uniform:a:b" or "point:mu".
std::string RenderGroupModel(const GroupModel& model);
absl::StatusOr<GroupModel> ParseGroupModel(absl::string_view text);

struct PopulationModel {
  std::vector<GroupModel> groups;
  friend bool operator==(const PopulationModel&,
                         const PopulationModel&) = default;
};

// Copy of `spec` whose sigma2 are the model's group variances.
absl::StatusOr<ProblemSpec> WithModelVariances(const ProblemSpec& spec,
                                               const PopulationModel& model);

// sum N_i mu_i / sum N_i.
double PopulationMean(const ProblemSpec& spec, const PopulationModel& model);

struct SimulationOptions {
  bool zero_noise_for_testing = false;
  int threads = 1;
};

struct SimulationReport {
  int64_t replications = 0;
  double empirical_variance = 0.0;
  double analytic_variance = 0.0;  // Var(mu-hat) from the objective
  double standard_error = 0.0;     // of empirical_variance
  double empirical_mean = 0.0;
  double true_mean = 0.0;
  double empirical_bias = 0.0;
  double bias_standard_error = 0.0;
  uint64_t seed = 0;
  std::vector<std::string> warnings;

  friend bool operator==(const SimulationReport&,
                         const SimulationReport&) = default;
};

// One draw of the stratified estimator: n_i i.i.d. responses per group, each
// privatized at rate n_i / N_i, combined as sum N_i mu-hat_i / sum N_i.
// Group i draws from the stream keyed by (seed, replicate, i).
absl::StatusOr<double> RunReplication(const PopulationModel& model,
                                      const ProblemSpec& spec,
                                      absl::Span<const int64_t> n,
                                      uint64_t seed, uint64_t replicate,
                                      const SimulationOptions& options = {});

// Needs replications >= 1000. Deterministic given the seed, for any thread
// count.
absl::StatusOr<SimulationReport> MonteCarloVariance(
    const PopulationModel& model, const ProblemSpec& spec,
    absl::Span<const int64_t> n, int64_t replications, uint64_t seed,
    const SimulationOptions& options = {});

struct SweepRow {
  double epsilon = 0.0;
  absl::Status status;
  ContinuousAllocation neyman;
  ContinuousAllocation proportional;
  IntegerAllocation naive;  // rounded Neyman allocation
  ContinuousDesign continuous;
  IntegerDesign optimal;
  double naive_objective = 0.0;
  double optimal_objective = 0.0;
  double ratio = 0.0;  // naive_objective / optimal_objective
  // g(Neyman) / g(x*) before any rounding.
  double continuous_ratio = 0.0;
};

// One row per epsilon; the template's epsilon is replaced. Failures are
// recorded in the row's status and the sweep continues.
std::vector<SweepRow> SweepEpsilon(const ProblemSpec& spec_template,
                                   absl::Span<const double> eps_grid,
                                   const IntegerSolveOptions& options = {});

enum class BenchMethod { kExhaustive, kAlgorithm1 };
std::string BenchMethodName(BenchMethod method);
absl::StatusOr<BenchMethod> ParseBenchMethod(absl::string_view name);

struct BenchRow {
  int64_t eta = 0;
  BenchMethod method = BenchMethod::kAlgorithm1;
  absl::Status status;  // kResourceExhausted for a budget refusal
  double wall_seconds = 0.0;
  // Designs evaluated, or for a refusal the number that would have been.
  // Exact below 2^53.
  double candidates = 0.0;
  double objective = 0.0;
  IntegerAllocation n;
};

struct BenchOptions {
  uint64_t exhaustive_budget = 10'000'000;
  IntegerSolveOptions solve;
};

std::vector<BenchRow> BenchIntegerSearch(const ProblemSpec& spec_template,
                                         absl::Span<const int64_t> eta_grid,
                                         BenchMethod method,
                                         const BenchOptions& options = {});

}  // namespace dpstrata

#endif  // DPSTRATA_SIMULATION_H_
