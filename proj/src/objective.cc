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

#include "dpstrata/objective.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absl/strings/str_cat.h"

namespace dpstrata {
namespace {

std::vector<double> ToDouble(absl::Span<const int64_t> n) {
  return std::vector<double>(n.begin(), n.end());
}

// tau_i^2 of the DLap/TuLap objective: sigma^2, plus 1/12 for TuLap.
double DiscreteTau2(const ProblemSpec& spec, int i) {
  return spec.mechanism == MechanismKind::kTuLap ? spec.variances[i] + 1.0 / 12
                                                 : spec.variances[i];
}

struct LaplacePieces {
  double log_term;        // L = log(1 + c N / x)
  double y;               // c N / x, possibly +inf
  double y_over_1_plus_y;  // y / (1 + y)
};

LaplacePieces Laplace(const ProblemSpec& spec, int i, double x) {
  const double budget = spec.privacy.budget();
  const double q = x / static_cast<double>(spec.group_sizes[i]);
  const double c = std::expm1(budget);
  LaplacePieces p;
  p.log_term = internal::NominalEpsilonUnchecked(budget, q);
  p.y = c / q;
  p.y_over_1_plus_y = 1.0 / (1.0 + q / c);
  return p;
}

}  // namespace

double LaplaceCurvatureBracket(double y, double log1p_y) {
  if (y < 5e-3) {
    const double y2 = y * y;
    return y2 * (1.0 / 12 +
                 y2 * (-7.0 / 180 + y * (1.0 / 18 - y * (313.0 / 5040))));
  }
  const double a = (1.0 + 1.0 / y) * log1p_y - 2.0;
  return a * a - 1.0 + log1p_y;
}

namespace internal {

double GroupTerm(const ProblemSpec& spec, int i, double x) {
  const double alpha = spec.weight(i);
  const double q = x / static_cast<double>(spec.group_sizes[i]);
  const double gamma2 =
      NoiseVarianceUnchecked(spec.mechanism, spec.privacy.budget(), q);
  return alpha * alpha / x * (spec.variances[i] + gamma2);
}

double GroupGradient(const ProblemSpec& spec, int i, double x) {
  const double alpha = spec.weight(i);
  const double a2 = alpha * alpha;
  const double x2 = x * x;
  if (spec.mechanism == MechanismKind::kLaplace) {
    const LaplacePieces p = Laplace(spec, i, x);
    const double inv_l = 1.0 / p.log_term;
    // d/dx [2 / (x L^2)] with dL/dx = -y / (x (1 + y)).
    const double noise =
        2.0 / x2 * inv_l * inv_l * (-1.0 + 2.0 * p.y_over_1_plus_y * inv_l);
    return a2 * (-spec.variances[i] / x2 + noise);
  }
  // alpha^2 / x * 2 q (c + q) / c^2 = 2 alpha^2 (c + x / N) / (N c^2).
  const double c = std::expm1(spec.privacy.budget());
  const double n = static_cast<double>(spec.group_sizes[i]);
  const double slope = 2.0 / (n * c) / (n * c);
  return a2 * (-DiscreteTau2(spec, i) / x2 + slope);
}

double GroupCurvature(const ProblemSpec& spec, int i, double x) {
  const double alpha = spec.weight(i);
  const double a2 = alpha * alpha;
  const double x3 = x * x * x;
  if (spec.mechanism == MechanismKind::kLaplace) {
    const LaplacePieces p = Laplace(spec, i, x);
    const double l2 = p.log_term * p.log_term;
    const double bracket = LaplaceCurvatureBracket(p.y, p.log_term);
    // Second derivative of 2 / (x L^2), expressed through y = c N / x.
    const double noise = 4.0 * bracket * p.y_over_1_plus_y *
                         p.y_over_1_plus_y / (x3 * l2 * l2);
    return 2.0 * a2 * spec.variances[i] / x3 + a2 * noise;
  }
  return 2.0 * a2 * DiscreteTau2(spec, i) / x3;
}

double ObjectiveUnchecked(const ProblemSpec& spec, absl::Span<const double> x) {
  double total = 0.0;
  for (int i = 0; i < spec.num_groups(); ++i) {
    total += GroupTerm(spec, i, x[i]);
  }
  return total;
}

}  // namespace internal

absl::Status ValidateAllocationBounds(const ProblemSpec& spec,
                                      absl::Span<const double> x) {
  if (static_cast<int>(x.size()) != spec.num_groups()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "allocation has ", x.size(), " entries, expected ", spec.num_groups()));
  }
  for (int i = 0; i < spec.num_groups(); ++i) {
    if (!(x[i] > 0)) {
      return absl::OutOfRangeError(absl::StrCat(
          "allocation for group ", i, " must be positive, got ", x[i]));
    }
    if (x[i] > static_cast<double>(spec.group_sizes[i])) {
      return absl::OutOfRangeError(absl::StrCat(
          "allocation for group ", i, " exceeds its size ",
          spec.group_sizes[i], ", got ", x[i]));
    }
  }
  return absl::OkStatus();
}

absl::Status ValidateAllocationBounds(const ProblemSpec& spec,
                                      absl::Span<const int64_t> n) {
  return ValidateAllocationBounds(spec, ToDouble(n));
}

absl::StatusOr<double> ObjectiveValue(const ProblemSpec& spec,
                                      absl::Span<const double> x) {
  if (absl::Status s = ValidateAllocationBounds(spec, x); !s.ok()) return s;
  return internal::ObjectiveUnchecked(spec, x);
}

absl::StatusOr<double> ObjectiveValue(const ProblemSpec& spec,
                                      absl::Span<const int64_t> n) {
  return ObjectiveValue(spec, ToDouble(n));
}

absl::StatusOr<std::vector<double>> ObjectiveGradient(
    const ProblemSpec& spec, absl::Span<const double> x) {
  if (absl::Status s = ValidateAllocationBounds(spec, x); !s.ok()) return s;
  std::vector<double> grad(x.size());
  for (int i = 0; i < spec.num_groups(); ++i) {
    grad[i] = internal::GroupGradient(spec, i, x[i]);
  }
  return grad;
}

absl::StatusOr<std::vector<double>> ObjectiveHessianDiag(
    const ProblemSpec& spec, absl::Span<const double> x) {
  if (absl::Status s = ValidateAllocationBounds(spec, x); !s.ok()) return s;
  std::vector<double> diag(x.size());
  for (int i = 0; i < spec.num_groups(); ++i) {
    diag[i] = internal::GroupCurvature(spec, i, x[i]);
  }
  return diag;
}

absl::StatusOr<double> MeanEstimatorVariance(const ProblemSpec& spec,
                                             absl::Span<const double> x) {
  ProblemSpec population = spec;
  population.weight_mode = WeightMode::kPopulationMean;
  const double total = static_cast<double>(spec.population_size());
  absl::StatusOr<double> g = ObjectiveValue(population, x);
  if (!g.ok()) return g.status();
  return *g / (total * total);
}

absl::StatusOr<double> MeanEstimatorVariance(const ProblemSpec& spec,
                                             absl::Span<const int64_t> n) {
  return MeanEstimatorVariance(spec, ToDouble(n));
}

ContinuousAllocation AllocateProportionally(absl::Span<const double> w,
                                            int64_t total) {
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  ContinuousAllocation x(w.size());
  for (size_t i = 0; i < w.size(); ++i) {
    x[i] = w[i] / sum * static_cast<double>(total);
  }
  return x;
}

absl::StatusOr<ContinuousAllocation> NeymanAllocation(const ProblemSpec& spec) {
  std::vector<double> w(spec.num_groups());
  bool any_positive = false;
  for (int i = 0; i < spec.num_groups(); ++i) {
    w[i] = std::sqrt(spec.variances[i]) *
           static_cast<double>(spec.group_sizes[i]);
    any_positive |= w[i] > 0;
  }
  if (!any_positive) {
    return absl::FailedPreconditionError(
        "Neyman allocation is undefined when every group variance is zero");
  }
  return AllocateProportionally(w, spec.total_sample_size);
}

ContinuousAllocation ProportionalAllocation(const ProblemSpec& spec) {
  std::vector<double> w(spec.group_sizes.begin(), spec.group_sizes.end());
  return AllocateProportionally(w, spec.total_sample_size);
}

absl::StatusOr<double> VarianceRatio(const ProblemSpec& spec,
                                     absl::Span<const double> naive,
                                     absl::Span<const double> optimal) {
  absl::StatusOr<double> num = ObjectiveValue(spec, naive);
  if (!num.ok()) return num.status();
  absl::StatusOr<double> den = ObjectiveValue(spec, optimal);
  if (!den.ok()) return den.status();
  return *num / *den;
}

absl::StatusOr<double> VarianceRatio(const ProblemSpec& spec,
                                     absl::Span<const int64_t> naive,
                                     absl::Span<const int64_t> optimal) {
  return VarianceRatio(spec, ToDouble(naive), ToDouble(optimal));
}

absl::StatusOr<IntegerAllocation> RoundAllocation(absl::Span<const double> x,
                                                  int64_t total) {
  const int k = static_cast<int>(x.size());
  if (k == 0 || total < k) {
    return absl::FailedPreconditionError(absl::StrCat(
        "cannot give each of ", k, " groups a sample with total ", total));
  }
  double sum = 0.0;
  for (double v : x) {
    if (!(v >= 0) || !std::isfinite(v)) {
      return absl::InvalidArgumentError(
          absl::StrCat("allocation entries must be finite and >= 0, got ", v));
    }
    sum += v;
  }
  if (std::abs(sum - static_cast<double>(total)) >
      1e-6 * std::max(1.0, static_cast<double>(total))) {
    return absl::InvalidArgumentError(absl::StrCat(
        "allocation sums to ", sum, " but the total is ", total));
  }

  IntegerAllocation n(k);
  std::vector<double> remainder(k);
  int64_t assigned = 0;
  for (int i = 0; i < k; ++i) {
    const double f = std::floor(x[i]);
    n[i] = static_cast<int64_t>(f);
    remainder[i] = x[i] - f;
    assigned += n[i];
  }
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return remainder[a] > remainder[b];
  });
  for (int64_t left = total - assigned, j = 0; left > 0; --left, ++j) {
    ++n[order[j % k]];
  }
  // Floor overshoot can only come from sum(x) slightly above total.
  for (int64_t over = assigned - total, j = k - 1; over > 0; --over, --j) {
    --n[order[((j % k) + k) % k]];
  }

  for (int i = 0; i < k; ++i) {
    if (n[i] >= 1) continue;
    const int largest = static_cast<int>(
        std::max_element(n.begin(), n.end()) - n.begin());
    n[largest] -= 1 - n[i];
    n[i] = 1;
  }
  return n;
}

}  // namespace dpstrata
