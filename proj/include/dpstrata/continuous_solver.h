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

// Continuous relaxation: minimize g(x) subject to sum x_i = eta and
// 0 < x_i <= N_i. Closed forms cover the population-mean weights under
// DLap/TuLap and the pure-noise Laplace objective; everything else goes
// through an equality-constrained Newton method exploiting the diagonal
// Hessian.

#ifndef DPSTRATA_CONTINUOUS_SOLVER_H_
#define DPSTRATA_CONTINUOUS_SOLVER_H_

#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "dpstrata/objective.h"
#include "dpstrata/problem.h"

namespace dpstrata {

enum class SolveMethod {
  kClosedFormDiscrete,     // x_i proportional to tau_i N_i
  kClosedFormPureLaplace,  // x_i proportional to N_i
  kNewton,
};

std::string SolveMethodName(SolveMethod method);

struct ContinuousDesign {
  ContinuousAllocation x;
  double nu = 0.0;  // multiplier of sum x_i = eta: dg/dx_i + nu = 0 if free
  double objective = 0.0;
  double kkt_residual = 0.0;
  SolveMethod method = SolveMethod::kNewton;
  int iterations = 0;
  std::vector<std::string> warnings;
};

struct NewtonOptions {
  // Absolute KKT tolerance on the unnormalized objective. The solver never
  // asks for less than a small multiple of the rounding error in the
  // gradient (see EffectiveTolerance).
  double tolerance = 1e-10;
  int max_iterations = 200;
};

// Lower bound kept on every coordinate during Newton iterations.
double PositivityFloor(const ProblemSpec& spec);

// max(tolerance, 64 eps |largest gradient component magnitude|) at x.
double EffectiveTolerance(const ProblemSpec& spec, absl::Span<const double> x,
                          double tolerance);

struct KktReport {
  double nu = 0.0;
  double residual = 0.0;
};

// Stationarity residual at x. Coordinates at the positivity floor or at N_i
// count as active bounds and only contribute sign violations.
KktReport EvaluateKkt(const ProblemSpec& spec, absl::Span<const double> x);

// Closest point of {floor <= x_i <= N_i, sum x_i = eta} to y in the
// Euclidean norm.
ContinuousAllocation ProjectToFeasible(const ProblemSpec& spec,
                                       absl::Span<const double> y);

// DLap/TuLap with population-mean weights. Fails with kUnimplemented for
// other configurations, kOutOfRange when some x_i > N_i and
// kFailedPrecondition when some x_i = 0.
absl::StatusOr<ContinuousDesign> ClosedFormDiscrete(const ProblemSpec& spec);

// Minimizer of the pure-noise Laplace objective (sigma_i^2 = 0) with
// population-mean weights; objective and KKT residual refer to that
// objective.
absl::StatusOr<ContinuousDesign> ClosedFormPureLaplace(const ProblemSpec& spec);

// Starts from `x0` when given, otherwise from the Neyman allocation (or the
// proportional one if every sigma_i is zero) projected onto the feasible set.
// On non-convergence returns kDeadlineExceeded whose message carries the
// last residual and whose "dpstrata/last_iterate" payload holds the iterate.
absl::StatusOr<ContinuousDesign> SolveNewton(
    const ProblemSpec& spec, const ContinuousAllocation* x0 = nullptr,
    const NewtonOptions& options = {});

// Closed form when it applies and is feasible, Newton otherwise.
absl::StatusOr<ContinuousDesign> SolveContinuous(
    const ProblemSpec& spec, const NewtonOptions& options = {});

}  // namespace dpstrata

#endif  // DPSTRATA_CONTINUOUS_SOLVER_H_
