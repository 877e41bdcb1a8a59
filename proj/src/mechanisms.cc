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

#include "dpstrata/mechanisms.h"

#include <cmath>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"

namespace dpstrata {

std::string MechanismName(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::kLaplace:
      return "laplace";
    case MechanismKind::kDiscreteLaplace:
      return "dlap";
    case MechanismKind::kTuLap:
      return "tulap";
  }
  return "unknown";
}

absl::StatusOr<MechanismKind> ParseMechanism(absl::string_view name) {
  const std::string lower = absl::AsciiStrToLower(name);
  if (lower == "laplace") return MechanismKind::kLaplace;
  if (lower == "dlap" || lower == "discrete_laplace") {
    return MechanismKind::kDiscreteLaplace;
  }
  if (lower == "tulap") return MechanismKind::kTuLap;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown mechanism '", name,
                   "' (expected laplace, dlap or tulap)"));
}

absl::Status ValidatePrivacyParams(const PrivacyParams& params) {
  if (!std::isfinite(params.epsilon) || params.epsilon <= 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be finite and positive, got ",
                     params.epsilon));
  }
  if (!std::isfinite(params.sensitivity) || params.sensitivity <= 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("sensitivity must be finite and positive, got ",
                     params.sensitivity));
  }
  return absl::OkStatus();
}

absl::Status ValidateSubsampleRate(double q) {
  if (!(q > 0 && q <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("subsample rate must lie in (0, 1], got ", q));
  }
  return absl::OkStatus();
}

absl::StatusOr<double> AmplifiedEpsilon(double eps_nominal, double q) {
  if (!std::isfinite(eps_nominal) || eps_nominal <= 0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "nominal epsilon must be finite and positive, got ", eps_nominal));
  }
  if (absl::Status s = ValidateSubsampleRate(q); !s.ok()) return s;
  if (eps_nominal <= 30) return std::log1p(q * std::expm1(eps_nominal));
  // log(q e^e + 1 - q) = e + log q + log1p((1 - q) e^-e / q)
  return eps_nominal + std::log(q) +
         std::log1p((1 - q) * std::exp(-eps_nominal) / q);
}

absl::StatusOr<double> NominalEpsilon(const PrivacyParams& params, double q) {
  if (absl::Status s = ValidatePrivacyParams(params); !s.ok()) return s;
  if (absl::Status s = ValidateSubsampleRate(q); !s.ok()) return s;
  return internal::NominalEpsilonUnchecked(params.budget(), q);
}

absl::StatusOr<double> NoiseVariance(MechanismKind kind,
                                     const PrivacyParams& params, double q) {
  if (absl::Status s = ValidatePrivacyParams(params); !s.ok()) return s;
  if (absl::Status s = ValidateSubsampleRate(q); !s.ok()) return s;
  return internal::NoiseVarianceUnchecked(kind, params.budget(), q);
}

namespace internal {

double NominalEpsilonUnchecked(double budget, double q) {
  if (budget <= 1) return std::log1p(std::expm1(budget) / q);
  // log(1 + (e^b - 1) / q) = b + log1p((q - 1) e^-b) - log q
  return budget + std::log1p((q - 1) * std::exp(-budget)) - std::log(q);
}

double NoiseVarianceUnchecked(MechanismKind kind, double budget, double q) {
  if (kind == MechanismKind::kLaplace) {
    const double nominal = NominalEpsilonUnchecked(budget, q);
    return 2.0 / (nominal * nominal);
  }
  const double c = std::expm1(budget);
  // 2 q (c + q) / c^2 written to stay finite when c overflows.
  const double ratio = q / c;
  double variance = 2.0 * ratio * (1.0 + ratio);
  if (kind == MechanismKind::kTuLap) variance += 1.0 / 12.0;
  return variance;
}

}  // namespace internal

absl::StatusOr<NoiseMechanism> NoiseMechanism::Create(
    MechanismKind kind, const PrivacyParams& params, double q) {
  if (absl::Status s = ValidatePrivacyParams(params); !s.ok()) return s;
  if (absl::Status s = ValidateSubsampleRate(q); !s.ok()) return s;
  const double budget = params.budget();
  return NoiseMechanism(kind, internal::NominalEpsilonUnchecked(budget, q),
                        internal::NoiseVarianceUnchecked(kind, budget, q),
                        /*zero=*/false);
}

NoiseMechanism NoiseMechanism::ZeroNoiseForTesting(MechanismKind kind) {
  return NoiseMechanism(kind, /*nominal_epsilon=*/INFINITY, /*variance=*/0.0,
                        /*zero=*/true);
}

double NoiseMechanism::dlap_parameter() const {
  return std::exp(-nominal_epsilon_);
}

double NoiseMechanism::Sample(RandomStream& stream) const {
  if (zero_) return 0.0;
  switch (kind_) {
    case MechanismKind::kLaplace:
      return SampleLaplace(stream);
    case MechanismKind::kDiscreteLaplace:
      return SampleDiscreteLaplace(stream);
    case MechanismKind::kTuLap: {
      const double k = SampleDiscreteLaplace(stream);
      return k + stream.NextCenteredUnit();
    }
  }
  return 0.0;
}

double NoiseMechanism::SampleLaplace(RandomStream& stream) const {
  // Inverse CDF on u in (-1/2, 1/2).
  const double u = stream.NextCenteredUnit();
  const double magnitude = -laplace_scale() * std::log1p(-2.0 * std::abs(u));
  return u < 0 ? -magnitude : magnitude;
}

double NoiseMechanism::SampleDiscreteLaplace(RandomStream& stream) const {
  // Difference of two geometric variables counting failures before a success
  // with probability 1 - p: P(G >= g) = p^g, so G = floor(-log(U) / nominal).
  const double g1 = std::floor(-std::log(stream.NextOpenUnit()) /
                               nominal_epsilon_);
  const double g2 = std::floor(-std::log(stream.NextOpenUnit()) /
                               nominal_epsilon_);
  return g1 - g2;
}

}  // namespace dpstrata
