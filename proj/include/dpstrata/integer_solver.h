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

// Integer-optimal designs.
//
// Strong convexity gives g(n) >= g(x*) + (lambda / 2) |n - x*|^2 on the
// constraint plane, so any integer design at least as good as the best
// floor/ceil rounding n_init of the continuous optimum x* lies in the ball of
// radius r = sqrt(2 (g(n_init) - g(x*)) / lambda) around x*. The ball search
// enumerates exactly that ball; the exhaustive search enumerates every
// composition and is the reference oracle.

#ifndef DPSTRATA_INTEGER_SOLVER_H_
#define DPSTRATA_INTEGER_SOLVER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "dpstrata/continuous_solver.h"
#include "dpstrata/objective.h"
#include "dpstrata/problem.h"

namespace dpstrata {

// kPaper takes lambda as the smallest Hessian entry at x*. kConservative
// takes the smallest entry over a box that provably contains the ball, which
// makes the radius a valid bound.
enum class LambdaMode { kPaper, kConservative };

enum class Certificate {
  kBallSearch,          // minimum over all feasible integer designs
  kExhaustive,          // minimum over all feasible integer designs
  kNearestIntegerOnly,  // best floor/ceil rounding; no optimality claim
};

std::string LambdaModeName(LambdaMode mode);
absl::StatusOr<LambdaMode> ParseLambdaMode(absl::string_view name);
std::string CertificateName(Certificate certificate);

struct IntegerDesign {
  IntegerAllocation n;
  double objective = 0.0;
  double continuous_objective = 0.0;  // g(x*); NaN for exhaustive search
  double radius = 0.0;
  double lambda = 0.0;
  LambdaMode lambda_mode = LambdaMode::kConservative;
  int64_t candidates_evaluated = 0;  // ball (or exhaustive) points evaluated
  int64_t grid_candidates = 0;       // floor/ceil points evaluated
  Certificate certificate = Certificate::kNearestIntegerOnly;
  double optimality_gap = 0.0;  // (g(n) - g(x*)) / g(x*); NaN if no x*
};

struct SearchRadiusResult {
  double radius = 0.0;
  double lambda = 0.0;
  // Conservative rounds used; 0 in paper mode, -1 when the global fallback
  // (smallest curvature over the whole feasible box) was needed.
  int rounds = 0;
};

struct IntegerSolveOptions {
  LambdaMode lambda_mode = LambdaMode::kConservative;
  // Accept n_init without the ball search when its relative gap is at most
  // this value.
  std::optional<double> gap_threshold;
  int threads = 1;
  // Exhaustive fallback when the radius is unbounded (zero curvature).
  uint64_t exhaustive_budget = 10'000'000;
  NewtonOptions newton;
};

// Best feasible point of the floor/ceil grid around x* on the first k-1
// coordinates (the last one absorbs the remainder).
absl::StatusOr<IntegerDesign> NearestIntegerCandidates(
    const ProblemSpec& spec, const ContinuousDesign& x_star);

absl::StatusOr<SearchRadiusResult> SearchRadius(
    const ProblemSpec& spec, const ContinuousDesign& x_star,
    absl::Span<const int64_t> n_init, LambdaMode mode);

// Calls `visit` for every feasible integer design within distance r of
// x_star, in lexicographic order. Returns the number of designs visited.
int64_t EnumerateBall(const ProblemSpec& spec, absl::Span<const double> x_star,
                      double r,
                      const std::function<void(absl::Span<const int64_t>)>&
                          visit);

absl::StatusOr<IntegerDesign> SolveInteger(
    const ProblemSpec& spec, const IntegerSolveOptions& options = {});

// As SolveInteger, from an already computed continuous optimum.
absl::StatusOr<IntegerDesign> SolveIntegerFrom(
    const ProblemSpec& spec, const ContinuousDesign& x_star,
    const IntegerSolveOptions& options = {});

// Number of compositions of eta into k parts with 1 <= n_i <= N_i,
// saturating at UINT64_MAX.
uint64_t CountFeasibleDesigns(const ProblemSpec& spec);
// The same count in floating point, for sizes beyond uint64.
double ApproximateFeasibleDesigns(const ProblemSpec& spec);

struct ExhaustiveOptions {
  uint64_t budget = 10'000'000;
  int threads = 1;
};

// Refuses with kResourceExhausted when the design count exceeds the budget.
absl::StatusOr<IntegerDesign> ExhaustiveSearch(
    const ProblemSpec& spec, const ExhaustiveOptions& options = {});

}  // namespace dpstrata

#endif  // DPSTRATA_INTEGER_SOLVER_H_
