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

#include "dpstrata/simulation.h"

#include <chrono>
#include <cmath>
#include <thread>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "dpstrata/status_macros.h"

namespace dpstrata {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool IsIntegerValued(const GroupModel& model) {
  return std::visit(
      Overloaded{[](const Bernoulli&) { return true; },
                 [](const UniformRange& u) { return u.a == u.b &&
                                                    std::floor(u.a) == u.a; },
                 [](const PointMass& m) { return std::floor(m.mu) == m.mu; }},
      model);
}

absl::StatusOr<double> ParseNumber(absl::string_view text) {
  double v;
  if (!absl::SimpleAtod(text, &v)) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected a number, got '", text, "'"));
  }
  return v;
}

absl::Status CheckDesign(const PopulationModel& model, const ProblemSpec& spec,
                         absl::Span<const int64_t> n) {
  RETURN_IF_ERROR(ValidateProblemSpec(spec));
  if (model.groups.size() != spec.group_sizes.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "population model has ", model.groups.size(), " groups, spec has ",
        spec.num_groups()));
  }
  for (const GroupModel& g : model.groups) {
    RETURN_IF_ERROR(ValidateGroupModel(g));
  }
  RETURN_IF_ERROR(ValidateAllocationBounds(spec, n));
  int64_t total = 0;
  for (int64_t v : n) total += v;
  if (total != spec.total_sample_size) {
    return absl::InvalidArgumentError(absl::StrCat(
        "allocation sums to ", total, ", expected eta=",
        spec.total_sample_size));
  }
  return absl::OkStatus();
}

// Calibrated mechanism per group.
absl::StatusOr<std::vector<NoiseMechanism>> GroupMechanisms(
    const ProblemSpec& spec, absl::Span<const int64_t> n,
    const SimulationOptions& options) {
  std::vector<NoiseMechanism> mechanisms;
  for (int i = 0; i < spec.num_groups(); ++i) {
    if (options.zero_noise_for_testing) {
      mechanisms.push_back(NoiseMechanism::ZeroNoiseForTesting(spec.mechanism));
      continue;
    }
    const double q = static_cast<double>(n[i]) /
                     static_cast<double>(spec.group_sizes[i]);
    ASSIGN_OR_RETURN(NoiseMechanism m,
                     NoiseMechanism::Create(spec.mechanism, spec.privacy, q));
    mechanisms.push_back(m);
  }
  return mechanisms;
}

double Estimate(const PopulationModel& model, const ProblemSpec& spec,
                absl::Span<const int64_t> n,
                absl::Span<const NoiseMechanism> mechanisms, uint64_t seed,
                uint64_t replicate) {
  double weighted = 0.0;
  for (int i = 0; i < spec.num_groups(); ++i) {
    RandomStream stream = RandomStream::ForKey(seed, replicate, i);
    double sum = 0.0;
    for (int64_t j = 0; j < n[i]; ++j) {
      sum += mechanisms[i].Privatize(SampleModel(model.groups[i], stream),
                                     stream);
    }
    weighted += static_cast<double>(spec.group_sizes[i]) * (sum / n[i]);
  }
  return weighted / static_cast<double>(spec.population_size());
}

}  // namespace

absl::Status ValidateGroupModel(const GroupModel& model) {
  return std::visit(
      Overloaded{
          [](const Bernoulli& b) {
            return b.p >= 0 && b.p <= 1
                       ? absl::OkStatus()
                       : absl::InvalidArgumentError(absl::StrCat(
                             "bernoulli p must lie in [0, 1], got ", b.p));
          },
          [](const UniformRange& u) {
            return std::isfinite(u.a) && std::isfinite(u.b) && u.a <= u.b
                       ? absl::OkStatus()
                       : absl::InvalidArgumentError(absl::StrCat(
                             "uniform bounds must be finite with a <= b, got ",
                             u.a, ", ", u.b));
          },
          [](const PointMass& m) {
            return std::isfinite(m.mu)
                       ? absl::OkStatus()
                       : absl::InvalidArgumentError("point mass must be finite");
          }},
      model);
}

double ModelMean(const GroupModel& model) {
  return std::visit(Overloaded{[](const Bernoulli& b) { return b.p; },
                               [](const UniformRange& u) {
                                 return 0.5 * (u.a + u.b);
                               },
                               [](const PointMass& m) { return m.mu; }},
                    model);
}

double ModelVariance(const GroupModel& model) {
  return std::visit(Overloaded{[](const Bernoulli& b) { return b.p * (1 - b.p); },
                               [](const UniformRange& u) {
                                 return (u.b - u.a) * (u.b - u.a) / 12.0;
                               },
                               [](const PointMass&) { return 0.0; }},
                    model);
}

double SampleModel(const GroupModel& model, RandomStream& stream) {
  return std::visit(
      Overloaded{[&](const Bernoulli& b) {
                   return stream.NextOpenUnit() < b.p ? 1.0 : 0.0;
                 },
                 [&](const UniformRange& u) {
                   return u.a + (u.b - u.a) * stream.NextOpenUnit();
                 },
                 [](const PointMass& m) { return m.mu; }},
      model);
}

absl::StatusOr<GroupModel> BernoulliWithVariance(double sigma2) {
  if (!(sigma2 >= 0 && sigma2 <= 0.25)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "a Bernoulli variance must lie in [0, 1/4], got ", sigma2));
  }
  // Smaller root of p^2 - p + sigma2 = 0, written without cancellation.
  const double p = 2 * sigma2 / (1 + std::sqrt(1 - 4 * sigma2));
  return Bernoulli{p};
}

std::string RenderGroupModel(const GroupModel& model) {
  return std::visit(
      Overloaded{[](const Bernoulli& b) {
                   return absl::StrFormat("bernoulli:%.17g", b.p);
                 },
                 [](const UniformRange& u) {
                   return absl::StrFormat("uniform:%.17g:%.17g", u.a, u.b);
                 },
                 [](const PointMass& m) {
                   return absl::StrFormat("point:%.17g", m.mu);
                 }},
      model);
}

absl::StatusOr<GroupModel> ParseGroupModel(absl::string_view text) {
  const std::vector<std::string> parts =
      absl::StrSplit(absl::StripAsciiWhitespace(text), ':');
  const std::string kind = absl::AsciiStrToLower(parts[0]);
  GroupModel model;
  if (kind == "bernoulli" && parts.size() == 2) {
    ASSIGN_OR_RETURN(double p, ParseNumber(parts[1]));
    model = Bernoulli{p};
  } else if (kind == "uniform" && parts.size() == 3) {
    ASSIGN_OR_RETURN(double a, ParseNumber(parts[1]));
    ASSIGN_OR_RETURN(double b, ParseNumber(parts[2]));
    model = UniformRange{a, b};
  } else if (kind == "point" && parts.size() == 2) {
    ASSIGN_OR_RETURN(double mu, ParseNumber(parts[1]));
    model = PointMass{mu};
  } else {
    return absl::InvalidArgumentError(absl::StrCat(
        "unrecognized group model '", text,
        "' (expected bernoulli:p, uniform:a:b or point:mu)"));
  }
  RETURN_IF_ERROR(ValidateGroupModel(model));
  return model;
}

absl::StatusOr<ProblemSpec> WithModelVariances(const ProblemSpec& spec,
                                               const PopulationModel& model) {
  if (model.groups.size() != spec.group_sizes.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "population model has ", model.groups.size(), " groups, spec has ",
        spec.num_groups()));
  }
  ProblemSpec out = spec;
  out.variances.resize(model.groups.size());
  for (size_t i = 0; i < model.groups.size(); ++i) {
    RETURN_IF_ERROR(ValidateGroupModel(model.groups[i]));
    out.variances[i] = ModelVariance(model.groups[i]);
  }
  return out;
}

double PopulationMean(const ProblemSpec& spec, const PopulationModel& model) {
  double weighted = 0.0;
  for (int i = 0; i < spec.num_groups(); ++i) {
    weighted += static_cast<double>(spec.group_sizes[i]) *
                ModelMean(model.groups[i]);
  }
  return weighted / static_cast<double>(spec.population_size());
}

absl::StatusOr<double> RunReplication(const PopulationModel& model,
                                      const ProblemSpec& spec,
                                      absl::Span<const int64_t> n,
                                      uint64_t seed, uint64_t replicate,
                                      const SimulationOptions& options) {
  RETURN_IF_ERROR(CheckDesign(model, spec, n));
  ASSIGN_OR_RETURN(const std::vector<NoiseMechanism> mechanisms,
                   GroupMechanisms(spec, n, options));
  return Estimate(model, spec, n, mechanisms, seed, replicate);
}

absl::StatusOr<SimulationReport> MonteCarloVariance(
    const PopulationModel& model, const ProblemSpec& spec,
    absl::Span<const int64_t> n, int64_t replications, uint64_t seed,
    const SimulationOptions& options) {
  if (replications < 1000) {
    return absl::InvalidArgumentError(absl::StrCat(
        "Monte-Carlo variance needs at least 1000 replications, got ",
        replications));
  }
  RETURN_IF_ERROR(CheckDesign(model, spec, n));
  ASSIGN_OR_RETURN(const std::vector<NoiseMechanism> mechanisms,
                   GroupMechanisms(spec, n, options));

  std::vector<double> estimates(replications);
  auto run_range = [&](int64_t from, int64_t to) {
    for (int64_t r = from; r < to; ++r) {
      estimates[r] = Estimate(model, spec, n, mechanisms, seed, r);
    }
  };
  const int threads = std::max(1, options.threads);
  if (threads == 1) {
    run_range(0, replications);
  } else {
    std::vector<std::thread> workers;
    for (int t = 0; t < threads; ++t) {
      workers.emplace_back(run_range, replications * t / threads,
                           replications * (t + 1) / threads);
    }
    for (std::thread& w : workers) w.join();
  }

  // Replicate-ordered reduction, identical for any thread count.
  const double count = static_cast<double>(replications);
  // Shifted by the first estimate so identical replicates give exactly zero.
  const double shift = estimates[0];
  double sum = 0.0;
  for (double e : estimates) sum += e - shift;
  const double mean = shift + sum / count;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double e : estimates) {
    const double d = (e - mean) * (e - mean);
    m2 += d;
    m4 += d * d;
  }
  const double variance = m2 / (count - 1);
  m4 /= count;

  SimulationReport report;
  report.replications = replications;
  report.seed = seed;
  report.empirical_mean = mean;
  report.empirical_variance = variance;
  // Var(s^2) ~ (mu4 - sigma^4 (R - 3) / (R - 1)) / R.
  report.standard_error = std::sqrt(
      std::max(0.0, m4 - variance * variance * (count - 3) / (count - 1)) /
      count);
  report.true_mean = PopulationMean(spec, model);
  report.empirical_bias = mean - report.true_mean;
  report.bias_standard_error = std::sqrt(variance / count);

  ASSIGN_OR_RETURN(const ProblemSpec analytic_spec,
                   WithModelVariances(spec, model));
  if (options.zero_noise_for_testing) {
    // Noise-free pipeline: only sampling variance remains.
    double v = 0.0;
    const double total = static_cast<double>(spec.population_size());
    for (int i = 0; i < spec.num_groups(); ++i) {
      const double w = static_cast<double>(spec.group_sizes[i]) / total;
      v += w * w * analytic_spec.variances[i] / static_cast<double>(n[i]);
    }
    report.analytic_variance = v;
  } else {
    ASSIGN_OR_RETURN(report.analytic_variance,
                     MeanEstimatorVariance(analytic_spec, n));
  }
  if (spec.mechanism == MechanismKind::kDiscreteLaplace) {
    for (int i = 0; i < spec.num_groups(); ++i) {
      if (!IsIntegerValued(model.groups[i])) {
        report.warnings.push_back(absl::StrCat(
            "group ", i, " has non-integer responses under dlap; the "
            "variance formula still holds but the mechanism is meant for "
            "integer data"));
      }
    }
  }
  return report;
}

std::vector<SweepRow> SweepEpsilon(const ProblemSpec& spec_template,
                                   absl::Span<const double> eps_grid,
                                   const IntegerSolveOptions& options) {
  std::vector<SweepRow> rows;
  for (double eps : eps_grid) {
    SweepRow row;
    row.epsilon = eps;
    ProblemSpec spec = spec_template;
    spec.privacy.epsilon = eps;
    row.status = [&]() -> absl::Status {
      RETURN_IF_ERROR(ValidateProblemSpec(spec));
      ASSIGN_OR_RETURN(row.neyman, NeymanAllocation(spec));
      row.proportional = ProportionalAllocation(spec);
      ASSIGN_OR_RETURN(row.naive,
                       RoundAllocation(row.neyman, spec.total_sample_size));
      ASSIGN_OR_RETURN(row.continuous, SolveContinuous(spec, options.newton));
      ASSIGN_OR_RETURN(row.optimal,
                       SolveIntegerFrom(spec, row.continuous, options));
      ASSIGN_OR_RETURN(row.naive_objective, ObjectiveValue(spec, row.naive));
      row.optimal_objective = row.optimal.objective;
      row.ratio = row.naive_objective / row.optimal_objective;
      ASSIGN_OR_RETURN(const double neyman_objective,
                       ObjectiveValue(spec, row.neyman));
      row.continuous_ratio = neyman_objective / row.continuous.objective;
      return absl::OkStatus();
    }();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string BenchMethodName(BenchMethod method) {
  return method == BenchMethod::kExhaustive ? "exhaustive" : "algorithm1";
}

absl::StatusOr<BenchMethod> ParseBenchMethod(absl::string_view name) {
  const std::string lower = absl::AsciiStrToLower(name);
  if (lower == "exhaustive") return BenchMethod::kExhaustive;
  if (lower == "algorithm1" || lower == "ball") return BenchMethod::kAlgorithm1;
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown bench method '", name, "' (expected exhaustive or algorithm1)"));
}

std::vector<BenchRow> BenchIntegerSearch(const ProblemSpec& spec_template,
                                         absl::Span<const int64_t> eta_grid,
                                         BenchMethod method,
                                         const BenchOptions& options) {
  std::vector<BenchRow> rows;
  for (int64_t eta : eta_grid) {
    BenchRow row;
    row.eta = eta;
    row.method = method;
    ProblemSpec spec = spec_template;
    spec.total_sample_size = eta;
    const auto start = std::chrono::steady_clock::now();
    absl::StatusOr<IntegerDesign> design =
        method == BenchMethod::kExhaustive
            ? ExhaustiveSearch(spec, ExhaustiveOptions{options.exhaustive_budget,
                                                       options.solve.threads})
            : SolveInteger(spec, options.solve);
    row.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    if (design.ok()) {
      row.candidates = static_cast<double>(design->candidates_evaluated +
                                           design->grid_candidates);
      row.objective = design->objective;
      row.n = design->n;
    } else {
      row.status = design.status();
      if (absl::IsResourceExhausted(row.status) &&
          ValidateProblemSpec(spec).ok()) {
        row.candidates = ApproximateFeasibleDesigns(spec);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace dpstrata
