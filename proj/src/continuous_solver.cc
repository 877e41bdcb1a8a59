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

#include "dpstrata/continuous_solver.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "absl/strings/cord.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "dpstrata/status_macros.h"

namespace dpstrata {
namespace {

constexpr double kArmijo = 1e-4;

enum class BoundState { kFree, kLower, kUpper };

double Upper(const ProblemSpec& spec, int i) {
  return static_cast<double>(spec.group_sizes[i]);
}

bool AtLower(const ProblemSpec& spec, double x) {
  return x <= PositivityFloor(spec) * (1 + 1e-9);
}

bool AtUpper(const ProblemSpec& spec, int i, double x) {
  return x >= Upper(spec, i) * (1 - 1e-15);
}

// Multiplier solving the Newton KKT system over the free coordinates.
double NewtonMultiplier(absl::Span<const double> grad,
                        absl::Span<const double> hess,
                        absl::Span<const BoundState> state) {
  double num = 0.0;
  double den = 0.0;
  for (size_t i = 0; i < grad.size(); ++i) {
    if (state[i] != BoundState::kFree) continue;
    num += grad[i] / hess[i];
    den += 1.0 / hess[i];
  }
  if (den > 0) return -num / den;
  // Nothing free: any nu between the active-bound sign constraints works.
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < grad.size(); ++i) {
    if (state[i] == BoundState::kLower) lo = std::max(lo, -grad[i]);
    if (state[i] == BoundState::kUpper) hi = std::min(hi, -grad[i]);
  }
  if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
  return std::isfinite(lo) ? lo : hi;
}

// Sign violation of an active bound, or |g + nu| for a free coordinate.
double Violation(BoundState state, double g_plus_nu) {
  switch (state) {
    case BoundState::kFree:
      return std::abs(g_plus_nu);
    case BoundState::kLower:
      return std::max(0.0, -g_plus_nu);
    case BoundState::kUpper:
      return std::max(0.0, g_plus_nu);
  }
  return 0.0;
}

// eta - sum_i x_i, signed.
double SumDefect(const ProblemSpec& spec, absl::Span<const double> x) {
  const double sum = std::accumulate(x.begin(), x.end(), 0.0);
  return static_cast<double>(spec.total_sample_size) - sum;
}

double SumResidual(const ProblemSpec& spec, absl::Span<const double> x) {
  return std::abs(SumDefect(spec, x));
}

// Rounding floor for the sum constraint, in sample units.
double FeasibilityTolerance(const ProblemSpec& spec, double tolerance) {
  return std::max(tolerance, 64 * std::numeric_limits<double>::epsilon() *
                                 static_cast<double>(spec.total_sample_size));
}

// Stationarity residual only; the sum constraint is checked on its own.
KktReport Kkt(absl::Span<const double> grad, absl::Span<const double> hess,
              absl::Span<const BoundState> state) {
  KktReport report;
  report.nu = NewtonMultiplier(grad, hess, state);
  report.residual = 0.0;
  for (size_t i = 0; i < grad.size(); ++i) {
    report.residual =
        std::max(report.residual, Violation(state[i], grad[i] + report.nu));
  }
  return report;
}

std::vector<double> CurvatureForStep(const ProblemSpec& spec,
                                     absl::Span<const double> x) {
  std::vector<double> hess(x.size());
  double largest = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    hess[i] = internal::GroupCurvature(spec, static_cast<int>(i), x[i]);
    largest = std::max(largest, hess[i]);
  }
  // Zero-curvature (linear) groups get a tiny curvature so that the step
  // drives them onto a bound, where they become active.
  const double tiny =
      std::max(largest * 1e-12, std::numeric_limits<double>::min());
  for (double& h : hess) h = std::max(h, tiny);
  return hess;
}

std::vector<double> Gradient(const ProblemSpec& spec,
                             absl::Span<const double> x) {
  std::vector<double> grad(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    grad[i] = internal::GroupGradient(spec, static_cast<int>(i), x[i]);
  }
  return grad;
}

ContinuousDesign Finish(const ProblemSpec& spec, ContinuousAllocation x,
                        SolveMethod method) {
  ContinuousDesign design;
  design.objective = internal::ObjectiveUnchecked(spec, x);
  const KktReport kkt = EvaluateKkt(spec, x);
  design.nu = kkt.nu;
  design.kkt_residual = kkt.residual;
  design.method = method;
  design.x = std::move(x);
  return design;
}

absl::Status NonConvergence(absl::string_view why, absl::Span<const double> x,
                            double residual, int iterations) {
  absl::Status status = absl::DeadlineExceededError(
      absl::StrCat("Newton solver did not converge after ", iterations,
                   " iterations (", why, "); last KKT residual ", residual));
  status.SetPayload("dpstrata/last_iterate",
                    absl::Cord(absl::StrJoin(x, ",")));
  return status;
}

}  // namespace

std::string SolveMethodName(SolveMethod method) {
  switch (method) {
    case SolveMethod::kClosedFormDiscrete:
      return "closed_form_discrete";
    case SolveMethod::kClosedFormPureLaplace:
      return "closed_form_pure_laplace";
    case SolveMethod::kNewton:
      return "newton";
  }
  return "unknown";
}

double PositivityFloor(const ProblemSpec& spec) {
  return 1e-9 * static_cast<double>(spec.total_sample_size);
}

double EffectiveTolerance(const ProblemSpec& spec, absl::Span<const double> x,
                          double tolerance) {
  double scale = 0.0;
  for (int i = 0; i < spec.num_groups(); ++i) {
    scale = std::max(scale, internal::GroupTerm(spec, i, x[i]) / x[i]);
  }
  return std::max(tolerance,
                  64 * std::numeric_limits<double>::epsilon() * scale);
}

KktReport EvaluateKkt(const ProblemSpec& spec, absl::Span<const double> x) {
  std::vector<BoundState> state(x.size(), BoundState::kFree);
  for (int i = 0; i < spec.num_groups(); ++i) {
    if (AtLower(spec, x[i])) state[i] = BoundState::kLower;
    if (AtUpper(spec, i, x[i])) state[i] = BoundState::kUpper;
  }
  return Kkt(Gradient(spec, x), CurvatureForStep(spec, x), state);
}

ContinuousAllocation ProjectToFeasible(const ProblemSpec& spec,
                                       absl::Span<const double> y) {
  const int k = spec.num_groups();
  const double floor = PositivityFloor(spec);
  const double eta = static_cast<double>(spec.total_sample_size);
  auto at = [&](double shift, int i) {
    return std::clamp(y[i] - shift, floor, Upper(spec, i));
  };
  auto total = [&](double shift) {
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += at(shift, i);
    return s;
  };
  // total(shift) is nonincreasing; bracket and bisect.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    lo = std::min(lo, y[i] - Upper(spec, i));
    hi = std::max(hi, y[i] - floor);
  }
  for (int iter = 0; iter < 200 && hi - lo > 0; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (total(mid) > eta ? lo : hi) = mid;
  }
  ContinuousAllocation x(k);
  for (int i = 0; i < k; ++i) x[i] = at(0.5 * (lo + hi), i);
  // Spread the leftover rounding over coordinates strictly inside the box.
  const double leftover = eta - std::accumulate(x.begin(), x.end(), 0.0);
  std::vector<int> inside;
  for (int i = 0; i < k; ++i) {
    if (x[i] > floor && x[i] < Upper(spec, i)) inside.push_back(i);
  }
  for (int i : inside) {
    x[i] = std::clamp(x[i] + leftover / static_cast<double>(inside.size()),
                      floor, Upper(spec, i));
  }
  return x;
}

absl::StatusOr<ContinuousDesign> ClosedFormDiscrete(const ProblemSpec& spec) {
  RETURN_IF_ERROR(ValidateProblemSpec(spec));
  if (spec.mechanism == MechanismKind::kLaplace ||
      spec.weight_mode != WeightMode::kPopulationMean) {
    return absl::UnimplementedError(absl::StrCat(
        "closed form needs dlap or tulap with population_mean weights, got ",
        MechanismName(spec.mechanism), " with ",
        WeightModeName(spec.weight_mode)));
  }
  const double extra = spec.mechanism == MechanismKind::kTuLap ? 1.0 / 12 : 0;
  std::vector<double> w(spec.num_groups());
  for (int i = 0; i < spec.num_groups(); ++i) {
    const double tau = extra == 0 ? std::sqrt(spec.variances[i])
                                  : std::sqrt(spec.variances[i] + extra);
    w[i] = tau * static_cast<double>(spec.group_sizes[i]);
  }
  ContinuousAllocation x = AllocateProportionally(w, spec.total_sample_size);
  for (int i = 0; i < spec.num_groups(); ++i) {
    if (!(x[i] > 0)) {
      return absl::FailedPreconditionError(absl::StrCat(
          "closed form puts no samples in group ", i, " (zero variance)"));
    }
    if (x[i] > Upper(spec, i)) {
      return absl::OutOfRangeError(absl::StrCat(
          "closed form allocates ", x[i], " to group ", i, " of size ",
          spec.group_sizes[i]));
    }
  }
  return Finish(spec, std::move(x), SolveMethod::kClosedFormDiscrete);
}

absl::StatusOr<ContinuousDesign> ClosedFormPureLaplace(
    const ProblemSpec& spec) {
  RETURN_IF_ERROR(ValidateProblemSpec(spec));
  if (spec.weight_mode != WeightMode::kPopulationMean) {
    return absl::UnimplementedError(absl::StrCat(
        "pure-noise Laplace closed form needs population_mean weights, got ",
        WeightModeName(spec.weight_mode)));
  }
  ProblemSpec pure = spec;
  pure.mechanism = MechanismKind::kLaplace;
  std::fill(pure.variances.begin(), pure.variances.end(), 0.0);
  return Finish(pure, ProportionalAllocation(pure),
                SolveMethod::kClosedFormPureLaplace);
}

absl::StatusOr<ContinuousDesign> SolveNewton(const ProblemSpec& spec,
                                             const ContinuousAllocation* x0,
                                             const NewtonOptions& options) {
  RETURN_IF_ERROR(ValidateProblemSpec(spec));
  const int k = spec.num_groups();
  const double floor = PositivityFloor(spec);
  const double eta = static_cast<double>(spec.total_sample_size);

  ContinuousDesign design;
  ContinuousAllocation x;
  if (x0 != nullptr) {
    RETURN_IF_ERROR(ValidateAllocationBounds(spec, *x0));
    if (SumResidual(spec, *x0) > 1e-9 * eta) {
      return absl::InvalidArgumentError(
          absl::StrCat("starting point does not sum to eta=", eta));
    }
    x = *x0;
    for (double& v : x) v = std::max(v, floor);
  } else {
    absl::StatusOr<ContinuousAllocation> neyman = NeymanAllocation(spec);
    x = ProjectToFeasible(spec,
                          neyman.ok() ? *neyman : ProportionalAllocation(spec));
  }

  for (int i = 0; i < k; ++i) {
    if (spec.mechanism == MechanismKind::kDiscreteLaplace &&
        spec.variances[i] == 0) {
      design.warnings.push_back(absl::StrCat(
          "group ", i, " has zero variance under dlap; its objective term is "
          "linear and the optimum sits at the positivity floor"));
    }
  }

  std::vector<BoundState> state(k, BoundState::kFree);
  for (int i = 0; i < k; ++i) {
    if (AtUpper(spec, i, x[i])) state[i] = BoundState::kUpper;
  }

  double residual = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    design.iterations = iter;
    const std::vector<double> grad = Gradient(spec, x);
    const std::vector<double> hess = CurvatureForStep(spec, x);
    const double tol = EffectiveTolerance(spec, x, options.tolerance);
    const double feasibility_tol =
        FeasibilityTolerance(spec, options.tolerance);

    // Release the worst-violating active bound until the signs agree.
    KktReport kkt = Kkt(grad, hess, state);
    for (int released = 0; released < k; ++released) {
      int worst = -1;
      double worst_violation = tol;
      for (int i = 0; i < k; ++i) {
        if (state[i] == BoundState::kFree) continue;
        const double v = Violation(state[i], grad[i] + kkt.nu);
        if (v > worst_violation) {
          worst = i;
          worst_violation = v;
        }
      }
      if (worst < 0) break;
      state[worst] = BoundState::kFree;
      kkt = Kkt(grad, hess, state);
    }
    residual = kkt.residual;
    const double defect = SumDefect(spec, x);
    if (residual <= tol && std::abs(defect) <= feasibility_tol) {
      design.objective = internal::ObjectiveUnchecked(spec, x);
      design.nu = kkt.nu;
      design.kkt_residual = residual;
      design.method = SolveMethod::kNewton;
      design.x = std::move(x);
      return design;
    }

    std::vector<double> d(k, 0.0);
    double inverse_sum = 0.0;
    for (int i = 0; i < k; ++i) {
      if (state[i] == BoundState::kFree) inverse_sum += 1.0 / hess[i];
    }
    double slope = 0.0;
    double t_max = std::numeric_limits<double>::infinity();
    int blocking = -1;
    for (int i = 0; i < k; ++i) {
      if (state[i] != BoundState::kFree) continue;
      d[i] = -(grad[i] + kkt.nu) / hess[i];
      slope += (grad[i] + kkt.nu) * d[i];
      // Restore sum x = eta along the same metric.
      d[i] += defect / (hess[i] * inverse_sum);
      double limit = std::numeric_limits<double>::infinity();
      if (d[i] < 0) limit = (x[i] - floor) / -d[i];
      if (d[i] > 0) limit = (Upper(spec, i) - x[i]) / d[i];
      if (limit < t_max) {
        t_max = limit;
        blocking = i;
      }
    }
    if (residual <= tol) {
      // Stationary already; only the sum drifted.
      for (int i = 0; i < k; ++i) {
        x[i] = std::clamp(x[i] + d[i], floor, Upper(spec, i));
      }
      continue;
    }
    if (!(slope < 0)) {
      return NonConvergence("no descent direction", x, residual, iter);
    }

    const double f0 = internal::ObjectiveUnchecked(spec, x);
    // Near the optimum the decrease drops below the rounding of f itself.
    const double slack = 8 * std::numeric_limits<double>::epsilon() * f0;
    const double t_start = std::min(1.0, t_max);
    double t = t_start;
    ContinuousAllocation trial(k);
    for (int halvings = 0;; ++halvings) {
      for (int i = 0; i < k; ++i) {
        trial[i] = std::clamp(x[i] + t * d[i], floor, Upper(spec, i));
      }
      const double f = internal::ObjectiveUnchecked(spec, trial);
      if (f <= f0 + kArmijo * t * slope + slack) break;
      if (halvings >= 80) {
        return NonConvergence("line search failed", x, residual, iter);
      }
      t *= 0.5;
    }
    if (t == t_start && t_max <= 1.0 && blocking >= 0) {
      trial[blocking] = d[blocking] < 0 ? floor : Upper(spec, blocking);
      state[blocking] =
          d[blocking] < 0 ? BoundState::kLower : BoundState::kUpper;
    }
    x = std::move(trial);
  }
  return NonConvergence("iteration limit", x, residual,
                        options.max_iterations);
}

absl::StatusOr<ContinuousDesign> SolveContinuous(const ProblemSpec& spec,
                                                 const NewtonOptions& options) {
  RETURN_IF_ERROR(ValidateProblemSpec(spec));
  std::vector<std::string> notes;
  if (spec.mechanism != MechanismKind::kLaplace &&
      spec.weight_mode == WeightMode::kPopulationMean) {
    absl::StatusOr<ContinuousDesign> closed = ClosedFormDiscrete(spec);
    if (closed.ok()) return closed;
    notes.push_back(absl::StrCat("closed form not applicable (",
                                 closed.status().message(),
                                 "); solved with Newton"));
  }
  ASSIGN_OR_RETURN(ContinuousDesign design,
                   SolveNewton(spec, nullptr, options));
  design.warnings.insert(design.warnings.begin(), notes.begin(), notes.end());
  return design;
}

}  // namespace dpstrata
