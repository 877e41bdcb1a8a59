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

// The DP-aware stratified variance objective
//
//   g(x) = sum_i alpha_i^2 / x_i * (sigma_i^2 + gamma_i^2(x_i / N_i))
//
// with gamma_i^2 the noise variance of the group's mechanism at its subsample
// rate. The objective is separable, so its Hessian is diagonal.
//
// The objective is left unnormalized; for population-mean weights the
// variance of the estimated mean is g / (sum N_i)^2.

#ifndef DPSTRATA_OBJECTIVE_H_
#define DPSTRATA_OBJECTIVE_H_

#include <cstdint>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "dpstrata/problem.h"

namespace dpstrata {

using ContinuousAllocation = std::vector<double>;
using IntegerAllocation = std::vector<int64_t>;

// 0 < x_i <= N_i for every group and the right arity. The sum is not checked.
absl::Status ValidateAllocationBounds(const ProblemSpec& spec,
                                      absl::Span<const double> x);
absl::Status ValidateAllocationBounds(const ProblemSpec& spec,
                                      absl::Span<const int64_t> n);

absl::StatusOr<double> ObjectiveValue(const ProblemSpec& spec,
                                      absl::Span<const double> x);
absl::StatusOr<double> ObjectiveValue(const ProblemSpec& spec,
                                      absl::Span<const int64_t> n);

absl::StatusOr<std::vector<double>> ObjectiveGradient(
    const ProblemSpec& spec, absl::Span<const double> x);

// Diagonal of the Hessian. Strictly positive wherever sigma_i^2 > 0 or the
// mechanism is Laplace or TuLap; DLap groups with sigma_i^2 = 0 contribute a
// linear term and hence a zero entry.
absl::StatusOr<std::vector<double>> ObjectiveHessianDiag(
    const ProblemSpec& spec, absl::Span<const double> x);

// Var(mu-hat) of the population-mean estimator at this allocation, i.e. the
// objective with alpha_i = N_i divided by (sum N_i)^2, whatever the spec's
// weight mode.
absl::StatusOr<double> MeanEstimatorVariance(const ProblemSpec& spec,
                                             absl::Span<const double> x);
absl::StatusOr<double> MeanEstimatorVariance(const ProblemSpec& spec,
                                             absl::Span<const int64_t> n);

// x_i proportional to sigma_i N_i. Fails when every sigma_i is zero.
absl::StatusOr<ContinuousAllocation> NeymanAllocation(const ProblemSpec& spec);

// x_i proportional to N_i.
ContinuousAllocation ProportionalAllocation(const ProblemSpec& spec);

// g(naive) / g(optimal).
absl::StatusOr<double> VarianceRatio(const ProblemSpec& spec,
                                     absl::Span<const double> naive,
                                     absl::Span<const double> optimal);
absl::StatusOr<double> VarianceRatio(const ProblemSpec& spec,
                                     absl::Span<const int64_t> naive,
                                     absl::Span<const int64_t> optimal);

// Largest-remainder rounding to an integer vector summing to `total`, then
// lifting any zero entry to 1 by taking from the currently largest entry.
absl::StatusOr<IntegerAllocation> RoundAllocation(absl::Span<const double> x,
                                                  int64_t total);

// eta * w_i / sum_j w_j. Shared by every proportional-form allocation so that
// algebraically equal designs are also bit-identical.
ContinuousAllocation AllocateProportionally(absl::Span<const double> w,
                                            int64_t total);

// ((1 + 1/y) log(1 + y) - 2)^2 - 1 + log(1 + y), positive for all y > 0.
// `log1p_y` is log(1 + y) computed by the caller; y may be +inf. Uses a
// Taylor expansion where the closed form cancels catastrophically.
double LaplaceCurvatureBracket(double y, double log1p_y);

namespace internal {

// Per-group pieces without validation. `x` must be positive.
double GroupTerm(const ProblemSpec& spec, int i, double x);
double GroupGradient(const ProblemSpec& spec, int i, double x);
double GroupCurvature(const ProblemSpec& spec, int i, double x);

// Sum of GroupTerm in index order. Every objective evaluation in the library
// follows this summation order, so equal allocations give equal bits.
double ObjectiveUnchecked(const ProblemSpec& spec, absl::Span<const double> x);

}  // namespace internal

}  // namespace dpstrata

#endif  // DPSTRATA_OBJECTIVE_H_
