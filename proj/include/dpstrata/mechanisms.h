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

// Privacy-budget calibration under subsampling, and the additive noise
// models (variance and sampling) of the Laplace, discrete Laplace and
// truncated-uniform-Laplace mechanisms.
//
// Throughout, the per-group privacy budget enters only through the ratio
// epsilon / sensitivity. A group sampled at rate q = n / N runs its local
// mechanism at the nominal budget log((exp(epsilon / sensitivity) - 1 + q) / q),
// which after amplification by subsampling yields exactly epsilon.

#ifndef DPSTRATA_MECHANISMS_H_
#define DPSTRATA_MECHANISMS_H_

#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "dpstrata/random.h"

namespace dpstrata {

// The discrete Laplace mechanism is meant for integer-valued data; this is
// documented, not enforced on samples.
enum class MechanismKind { kLaplace, kDiscreteLaplace, kTuLap };

// "laplace", "dlap" or "tulap".
std::string MechanismName(MechanismKind kind);
absl::StatusOr<MechanismKind> ParseMechanism(absl::string_view name);

struct PrivacyParams {
  double epsilon = 1.0;      // target central-DP budget
  double sensitivity = 1.0;  // Delta f

  // epsilon / sensitivity.
  double budget() const { return epsilon / sensitivity; }

  friend bool operator==(const PrivacyParams&, const PrivacyParams&) = default;
};

absl::Status ValidatePrivacyParams(const PrivacyParams& params);

// Requires 0 < q <= 1.
absl::Status ValidateSubsampleRate(double q);

// Privacy guarantee log(1 - q + q * exp(eps_nominal)) of an eps_nominal-DP
// mechanism applied to a uniformly subsampled fraction q.
absl::StatusOr<double> AmplifiedEpsilon(double eps_nominal, double q);

// Nominal budget whose amplification at rate q equals epsilon / sensitivity.
absl::StatusOr<double> NominalEpsilon(const PrivacyParams& params, double q);

// Variance of one noise draw for a group sampled at rate q.
//   Laplace: 2 / nominal^2
//   DLap:    2 q (c + q) / c^2,  c = exp(epsilon / sensitivity) - 1
//   TuLap:   DLap + 1/12
absl::StatusOr<double> NoiseVariance(MechanismKind kind,
                                     const PrivacyParams& params, double q);

namespace internal {

// Unchecked versions; `budget` is epsilon / sensitivity. Both are accurate
// for budgets far beyond the range where exp(budget) overflows.
double NominalEpsilonUnchecked(double budget, double q);
double NoiseVarianceUnchecked(MechanismKind kind, double budget, double q);

}  // namespace internal

// A calibrated noise source for one group.
class NoiseMechanism {
 public:
  static absl::StatusOr<NoiseMechanism> Create(MechanismKind kind,
                                               const PrivacyParams& params,
                                               double q);

  // Degenerate mechanism whose samples are identically zero.
  static NoiseMechanism ZeroNoiseForTesting(MechanismKind kind);

  MechanismKind kind() const { return kind_; }
  double nominal_epsilon() const { return nominal_epsilon_; }
  double variance() const { return variance_; }

  // Laplace scale 1 / nominal_epsilon.
  double laplace_scale() const { return 1.0 / nominal_epsilon_; }

  // Discrete Laplace parameter p = exp(-nominal_epsilon), in (0, 1).
  double dlap_parameter() const;

  double Sample(RandomStream& stream) const;

  // y plus one noise draw.
  double Privatize(double y, RandomStream& stream) const {
    return y + Sample(stream);
  }

 private:
  NoiseMechanism(MechanismKind kind, double nominal_epsilon, double variance,
                 bool zero)
      : kind_(kind),
        nominal_epsilon_(nominal_epsilon),
        variance_(variance),
        zero_(zero) {}

  double SampleLaplace(RandomStream& stream) const;
  double SampleDiscreteLaplace(RandomStream& stream) const;

  MechanismKind kind_;
  double nominal_epsilon_;
  double variance_;
  bool zero_;
};

}  // namespace dpstrata

#endif  // DPSTRATA_MECHANISMS_H_
