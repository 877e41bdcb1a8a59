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

#include "dpstrata/commands.h"

#include <cmath>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "dpstrata/continuous_solver.h"
#include "dpstrata/objective.h"
#include "dpstrata/simulation.h"
#include "dpstrata/status_macros.h"

namespace dpstrata {

const char kDesignCsvHeader[] =
    "group_index,group_size,sigma2,alpha,x_star,n_star,naive_n,neyman,"
    "proportional,continuous_objective,integer_objective,naive_objective,"
    "variance_mu_hat,radius,lambda,lambda_mode,candidates_evaluated,"
    "certificate,optimality_gap,solve_method";
const char kCompareCsvHeader[] =
    "epsilon,mechanism,weight_mode,naive_objective,optimal_objective,ratio";
const char kSimulateCsvHeader[] =
    "mechanism,weight_mode,replications,seed,design,empirical_mean,true_mean,"
    "empirical_bias,bias_standard_error,empirical_variance,analytic_variance,"
    "standard_error,z_score";
const char kSweepCsvHeader[] =
    "epsilon,mechanism,weight_mode,naive_objective,optimal_objective,ratio,"
    "radius,candidates_evaluated,group_index,x_star,n_star,naive_n,neyman,"
    "proportional";
const char kBenchCsvHeader[] =
    "eta,method,wall_seconds,candidates,objective,status";

namespace {

std::string F(double v) { return absl::StrFormat("%.12g", v); }

int ExitCodeFor(const absl::Status& status) {
  return absl::IsResourceExhausted(status) ? kExitBudgetRefused
                                           : kExitSolverError;
}

// A solver failure wins over a budget refusal for the exit code.
void Fail(CommandResult& result, const absl::Status& status,
          absl::string_view context) {
  const int code = ExitCodeFor(status);
  if (result.exit_code == kExitOk || code == kExitSolverError) {
    result.exit_code = code;
  }
  if (!result.error.empty()) result.error += "\n";
  absl::StrAppend(&result.error, context, ": ", status.ToString());
}

IntegerSolveOptions SolveOptions(const RunConfig& config,
                                 const CommandOptions& options) {
  IntegerSolveOptions solve;
  solve.lambda_mode = options.lambda_mode.value_or(config.lambda_mode);
  solve.gap_threshold = options.gap_threshold.has_value()
                            ? options.gap_threshold
                            : config.gap_threshold;
  solve.threads = std::max(1, options.threads);
  solve.exhaustive_budget = config.exhaustive_budget;
  return solve;
}

void AppendWarnings(std::string& report,
                    const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) {
    absl::StrAppend(&report, "warning: ", w, "\n");
  }
}

CommandResult RunDesign(const RunConfig& config,
                        const CommandOptions& options) {
  CommandResult result;
  const ProblemSpec& spec = config.problem;
  const IntegerSolveOptions solve = SolveOptions(config, options);
  const absl::StatusOr<ContinuousDesign> continuous = SolveContinuous(spec);
  if (!continuous.ok()) {
    Fail(result, continuous.status(), "continuous solve");
    return result;
  }
  const absl::StatusOr<IntegerDesign> integer =
      SolveIntegerFrom(spec, *continuous, solve);
  if (!integer.ok()) {
    Fail(result, integer.status(), "integer solve");
    return result;
  }
  const absl::StatusOr<ContinuousAllocation> neyman_or = NeymanAllocation(spec);
  const ContinuousAllocation proportional = ProportionalAllocation(spec);
  const ContinuousAllocation neyman = neyman_or.ok() ? *neyman_or : proportional;
  const absl::StatusOr<IntegerAllocation> naive =
      RoundAllocation(neyman, spec.total_sample_size);
  const absl::StatusOr<double> naive_objective =
      naive.ok() ? ObjectiveValue(spec, *naive)
                 : absl::StatusOr<double>(naive.status());
  const absl::StatusOr<double> variance =
      MeanEstimatorVariance(spec, integer->n);
  if (!naive_objective.ok() || !variance.ok()) {
    Fail(result, !naive_objective.ok() ? naive_objective.status()
                                       : variance.status(),
         "evaluation");
    return result;
  }

  result.csv = absl::StrCat(kDesignCsvHeader, "\n");
  for (int i = 0; i < spec.num_groups(); ++i) {
    absl::StrAppend(
        &result.csv,
        absl::StrJoin(
            {absl::StrCat(i), absl::StrCat(spec.group_sizes[i]),
             F(spec.variances[i]), F(spec.weight(i)), F(continuous->x[i]),
             absl::StrCat(integer->n[i]), absl::StrCat((*naive)[i]),
             F(neyman[i]), F(proportional[i]), F(continuous->objective),
             F(integer->objective), F(*naive_objective), F(*variance),
             F(integer->radius), F(integer->lambda),
             LambdaModeName(integer->lambda_mode),
             absl::StrCat(integer->candidates_evaluated),
             CertificateName(integer->certificate),
             F(integer->optimality_gap), SolveMethodName(continuous->method)},
            ","),
        "\n");
  }

  std::string& r = result.report;
  absl::StrAppend(&r, "mechanism ", MechanismName(spec.mechanism),
                  ", weights ", WeightModeName(spec.weight_mode), ", epsilon ",
                  F(spec.privacy.epsilon), ", eta ", spec.total_sample_size,
                  "\n");
  absl::StrAppend(&r, "continuous x* = (",
                  absl::StrJoin(continuous->x, ", ",
                                [](std::string* s, double v) {
                                  s->append(absl::StrFormat("%.6f", v));
                                }),
                  ")  via ", SolveMethodName(continuous->method),
                  ", kkt residual ", F(continuous->kkt_residual), "\n");
  absl::StrAppend(&r, "integer n* = (", absl::StrJoin(integer->n, ", "),
                  ")  certificate ", CertificateName(integer->certificate),
                  "\n");
  absl::StrAppend(&r, "objective g(x*) = ", F(continuous->objective),
                  "  g(n*) = ", F(integer->objective), "  gap ",
                  F(integer->optimality_gap), "\n");
  absl::StrAppend(&r, "naive (rounded Neyman) n = (",
                  absl::StrJoin(*naive, ", "), ")  g = ", F(*naive_objective),
                  "  ratio ", F(*naive_objective / integer->objective), "\n");
  absl::StrAppend(&r, "Var(mu-hat) at n* = ", F(*variance), "\n");
  absl::StrAppend(&r, "radius ", F(integer->radius), ", lambda ",
                  F(integer->lambda), " (", LambdaModeName(integer->lambda_mode),
                  "), ", integer->candidates_evaluated, " ball candidates, ",
                  integer->grid_candidates, " grid candidates\n");
  AppendWarnings(r, continuous->warnings);
  return result;
}

// compare and sweep share the per-(epsilon, mechanism) solve.
CommandResult RunEpsilonTable(const RunConfig& config,
                              const CommandOptions& options, bool per_group) {
  CommandResult result;
  result.csv =
      absl::StrCat(per_group ? kSweepCsvHeader : kCompareCsvHeader, "\n");
  const IntegerSolveOptions solve = SolveOptions(config, options);
  for (MechanismKind mechanism : EffectiveMechanisms(config)) {
    ProblemSpec spec = config.problem;
    spec.mechanism = mechanism;
    const std::string mode = WeightModeName(spec.weight_mode);
    for (const SweepRow& row : SweepEpsilon(spec, config.eps_grid, solve)) {
      if (!row.status.ok()) {
        Fail(result, row.status,
             absl::StrCat(MechanismName(mechanism), " at epsilon ",
                          F(row.epsilon)));
        continue;
      }
      const std::string prefix =
          absl::StrJoin({F(row.epsilon), MechanismName(mechanism), mode,
                         F(row.naive_objective), F(row.optimal_objective),
                         F(row.ratio)},
                        ",");
      if (!per_group) {
        absl::StrAppend(&result.csv, prefix, "\n");
      } else {
        for (int i = 0; i < spec.num_groups(); ++i) {
          absl::StrAppend(
              &result.csv,
              absl::StrJoin(
                  {prefix, F(row.optimal.radius),
                   absl::StrCat(row.optimal.candidates_evaluated),
                   absl::StrCat(i), F(row.continuous.x[i]),
                   absl::StrCat(row.optimal.n[i]), absl::StrCat(row.naive[i]),
                   F(row.neyman[i]), F(row.proportional[i])},
                  ","),
              "\n");
        }
      }
      absl::StrAppend(&result.report, MechanismName(mechanism), " epsilon ",
                      F(row.epsilon), ": ratio ", F(row.ratio), " (n* = ",
                      absl::StrJoin(row.optimal.n, ","), ", naive ",
                      absl::StrJoin(row.naive, ","), ")\n");
      AppendWarnings(result.report, row.continuous.warnings);
    }
  }
  return result;
}

CommandResult RunSimulate(const RunConfig& config,
                          const CommandOptions& options) {
  CommandResult result;
  result.csv = absl::StrCat(kSimulateCsvHeader, "\n");
  PopulationModel model;
  for (const auto& g : config.models) model.groups.push_back(*g);
  SimulationOptions sim;
  sim.zero_noise_for_testing = config.zero_noise_for_testing;
  sim.threads = std::max(1, options.threads);
  const IntegerSolveOptions solve = SolveOptions(config, options);

  for (MechanismKind mechanism : EffectiveMechanisms(config)) {
    ProblemSpec spec = config.problem;
    spec.mechanism = mechanism;
    IntegerAllocation n = config.design;
    if (n.empty()) {
      absl::StatusOr<IntegerDesign> design = SolveInteger(spec, solve);
      if (!design.ok()) {
        Fail(result, design.status(),
             absl::StrCat(MechanismName(mechanism), " design"));
        continue;
      }
      n = design->n;
    }
    absl::StatusOr<SimulationReport> report =
        MonteCarloVariance(model, spec, n, config.reps, *config.seed, sim);
    if (!report.ok()) {
      Fail(result, report.status(),
           absl::StrCat(MechanismName(mechanism), " simulation"));
      continue;
    }
    const double z =
        report->standard_error > 0
            ? (report->empirical_variance - report->analytic_variance) /
                  report->standard_error
            : 0.0;
    absl::StrAppend(
        &result.csv,
        absl::StrJoin(
            {MechanismName(mechanism), WeightModeName(spec.weight_mode),
             absl::StrCat(report->replications), absl::StrCat(report->seed),
             absl::StrJoin(n, ";"), F(report->empirical_mean),
             F(report->true_mean), F(report->empirical_bias),
             F(report->bias_standard_error), F(report->empirical_variance),
             F(report->analytic_variance), F(report->standard_error), F(z)},
            ","),
        "\n");
    absl::StrAppend(&result.report, MechanismName(mechanism), ": n = (",
                    absl::StrJoin(n, ", "), "), empirical Var ",
                    F(report->empirical_variance), " vs analytic ",
                    F(report->analytic_variance), " (z = ", F(z), "), bias ",
                    F(report->empirical_bias), "\n");
    AppendWarnings(result.report, report->warnings);
  }
  return result;
}

CommandResult RunBench(const RunConfig& config,
                       const CommandOptions& options) {
  CommandResult result;
  result.csv = absl::StrCat(kBenchCsvHeader, "\n");
  BenchOptions bench;
  bench.exhaustive_budget = config.exhaustive_budget;
  bench.solve = SolveOptions(config, options);
  const std::vector<int64_t> etas =
      config.eta_grid.empty()
          ? std::vector<int64_t>{config.problem.total_sample_size}
          : config.eta_grid;
  const std::vector<BenchMethod> methods =
      config.bench_methods.empty()
          ? std::vector<BenchMethod>{BenchMethod::kAlgorithm1,
                                     BenchMethod::kExhaustive}
          : config.bench_methods;
  for (BenchMethod method : methods) {
    for (const BenchRow& row :
         BenchIntegerSearch(config.problem, etas, method, bench)) {
      std::string status = "ok";
      std::string objective = F(row.objective);
      if (absl::IsResourceExhausted(row.status)) {
        // A refusal is an expected bench outcome, not a failure.
        status = "refused";
        objective.clear();
      } else if (!row.status.ok()) {
        status = "error";
        objective.clear();
        Fail(result, row.status,
             absl::StrCat(BenchMethodName(method), " at eta ", row.eta));
      }
      absl::StrAppend(&result.csv, row.eta, ",", BenchMethodName(method), ",",
                      F(row.wall_seconds), ",", F(row.candidates), ",",
                      objective, ",", status, "\n");
      absl::StrAppend(&result.report, BenchMethodName(method), " eta ",
                      row.eta, ": ", status, ", ", F(row.wall_seconds),
                      " s, ", F(row.candidates), " candidates\n");
    }
  }
  return result;
}

}  // namespace

std::string CommandName(Command command) {
  switch (command) {
    case Command::kDesign:
      return "design";
    case Command::kCompare:
      return "compare";
    case Command::kSimulate:
      return "simulate";
    case Command::kSweep:
      return "sweep";
    case Command::kBench:
      return "bench";
  }
  return "unknown";
}

absl::StatusOr<Command> ParseCommand(absl::string_view name) {
  for (Command c : {Command::kDesign, Command::kCompare, Command::kSimulate,
                    Command::kSweep, Command::kBench}) {
    if (absl::AsciiStrToLower(name) == CommandName(c)) return c;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown command '", name, "'"));
}

absl::Status ValidateForCommand(const RunConfig& config, Command command) {
  RETURN_IF_ERROR(ValidateProblemSpec(config.problem));
  switch (command) {
    case Command::kCompare:
    case Command::kSweep:
      if (config.eps_grid.empty()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "eps_grid: required by ", CommandName(command)));
      }
      break;
    case Command::kSimulate:
      if (!config.seed.has_value()) {
        return absl::InvalidArgumentError(
            "seed: simulate requires an explicit seed");
      }
      for (size_t i = 0; i < config.models.size(); ++i) {
        if (!config.models[i].has_value()) {
          return absl::InvalidArgumentError(absl::StrCat(
              "group.", i, ".model: simulate requires a model for every group"));
        }
      }
      break;
    case Command::kDesign:
    case Command::kBench:
      break;
  }
  return absl::OkStatus();
}

CommandResult RunCommand(Command command, const RunConfig& config,
                         const CommandOptions& options) {
  if (absl::Status s = ValidateForCommand(config, command); !s.ok()) {
    CommandResult result;
    result.exit_code = kExitConfigError;
    result.error = std::string(s.message());
    return result;
  }
  switch (command) {
    case Command::kDesign:
      return RunDesign(config, options);
    case Command::kCompare:
      return RunEpsilonTable(config, options, /*per_group=*/false);
    case Command::kSweep:
      return RunEpsilonTable(config, options, /*per_group=*/true);
    case Command::kSimulate:
      return RunSimulate(config, options);
    case Command::kBench:
      return RunBench(config, options);
  }
  return {};
}

}  // namespace dpstrata
