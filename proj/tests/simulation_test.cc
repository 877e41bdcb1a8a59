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

#include <cmath>
#include <random>
#include <vector>

#include "dpstrata/integer_solver.h"
#include "dpstrata/objective.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "status_matchers.h"
#include "test_oracles.h"

namespace dpstrata {
namespace {

using ::dpstrata::testing::StatusIs;
using ::testing::HasSubstr;
using ::testing::IsEmpty;
using ::testing::SizeIs;

constexpr MechanismKind kAllMechanisms[] = {MechanismKind::kLaplace,
                                            MechanismKind::kDiscreteLaplace,
                                            MechanismKind::kTuLap};

ProblemSpec Spec(std::vector<int64_t> sizes, int64_t eta, MechanismKind mech,
                 double eps = 1.0) {
  ProblemSpec spec;
  spec.group_sizes = std::move(sizes);
  spec.variances.assign(spec.group_sizes.size(), 0.1);
  spec.total_sample_size = eta;
  spec.mechanism = mech;
  spec.privacy.epsilon = eps;
  return spec;
}

TEST(GroupModelTest, Moments) {
  EXPECT_DOUBLE_EQ(ModelMean(Bernoulli{0.3}), 0.3);
  EXPECT_DOUBLE_EQ(ModelVariance(Bernoulli{0.3}), 0.21);
  EXPECT_DOUBLE_EQ(ModelMean(UniformRange{2, 5}), 3.5);
  EXPECT_DOUBLE_EQ(ModelVariance(UniformRange{2, 5}), 0.75);
  EXPECT_EQ(ModelMean(PointMass{4}), 4);
  EXPECT_EQ(ModelVariance(PointMass{4}), 0);
}

TEST(GroupModelTest, Validation) {
  EXPECT_OK(ValidateGroupModel(Bernoulli{0}));
  EXPECT_OK(ValidateGroupModel(Bernoulli{1}));
  EXPECT_THAT(ValidateGroupModel(Bernoulli{1.5}),
              StatusIs(absl::StatusCode::kInvalidArgument));
  EXPECT_THAT(ValidateGroupModel(UniformRange{3, 2}),
              StatusIs(absl::StatusCode::kInvalidArgument));
  EXPECT_THAT(ValidateGroupModel(PointMass{std::nan("")}),
              StatusIs(absl::StatusCode::kInvalidArgument));
}

TEST(GroupModelTest, SampleMomentsMatch) {
  RandomStream stream(5);
  for (const GroupModel& m :
       {GroupModel{Bernoulli{0.2}}, GroupModel{UniformRange{-1, 3}}}) {
    double s = 0, s2 = 0;
    constexpr int kDraws = 1'000'000;
    for (int i = 0; i < kDraws; ++i) {
      const double v = SampleModel(m, stream);
      s += v;
      s2 += v * v;
    }
    const double mean = s / kDraws;
    const double var = s2 / kDraws - mean * mean;
    EXPECT_NEAR(mean, ModelMean(m), 5 * std::sqrt(ModelVariance(m) / kDraws));
    EXPECT_NEAR(var, ModelVariance(m), 0.01 * ModelVariance(m));
  }
}

TEST(GroupModelTest, RenderParseRoundTrip) {
  for (const GroupModel& m :
       {GroupModel{Bernoulli{0.1234567890123}}, GroupModel{UniformRange{-1, 2.5}},
        GroupModel{PointMass{1.0 / 3}}}) {
    absl::StatusOr<GroupModel> back = ParseGroupModel(RenderGroupModel(m));
    ASSERT_OK(back);
    EXPECT_EQ(*back, m);
  }
  EXPECT_THAT(ParseGroupModel("gauss:0:1"),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("gauss")));
  EXPECT_THAT(ParseGroupModel("bernoulli:x"),
              StatusIs(absl::StatusCode::kInvalidArgument));
  EXPECT_THAT(ParseGroupModel("bernoulli:2"),
              StatusIs(absl::StatusCode::kInvalidArgument));
}

TEST(BernoulliWithVarianceTest, InvertsVariance) {
  for (double s2 : {0.0, 1e-12, 0.08, 0.0064, 0.2, 0.25}) {
    absl::StatusOr<GroupModel> m = BernoulliWithVariance(s2);
    ASSERT_OK(m);
    const double p = std::get<Bernoulli>(*m).p;
    EXPECT_LE(p, 0.5);
    EXPECT_NEAR(p * (1 - p), s2, 1e-15);
  }
  EXPECT_THAT(BernoulliWithVariance(0.3),
              StatusIs(absl::StatusCode::kInvalidArgument));
}

TEST(RunReplicationTest, PointMassWithoutNoiseIsExact) {
  for (MechanismKind mech : kAllMechanisms) {
    const ProblemSpec spec = Spec({100, 300, 600}, 60, mech);
    const PopulationModel model{{PointMass{1}, PointMass{2}, PointMass{4}}};
    SimulationOptions options;
    options.zero_noise_for_testing = true;
    absl::StatusOr<double> e =
        RunReplication(model, spec, std::vector<int64_t>{10, 20, 30}, 1, 0, options);
    ASSERT_OK(e);
    EXPECT_NEAR(*e, PopulationMean(spec, model), 1e-15);
    EXPECT_DOUBLE_EQ(PopulationMean(spec, model), 0.1 + 0.6 + 2.4);

    absl::StatusOr<SimulationReport> r = MonteCarloVariance(
        model, spec, std::vector<int64_t>{10, 20, 30}, 1000, 2, options);
    ASSERT_OK(r);
    EXPECT_EQ(r->empirical_variance, 0.0);
    EXPECT_EQ(r->standard_error, 0.0);
    EXPECT_EQ(r->analytic_variance, 0.0);
  }
}

TEST(RunReplicationTest, Deterministic) {
  const ProblemSpec spec = Spec({100, 200}, 30, MechanismKind::kTuLap);
  const PopulationModel model{{Bernoulli{0.3}, UniformRange{0, 1}}};
  const std::vector<int64_t> n = {10, 20};
  const double a = *RunReplication(model, spec, n, 9, 4);
  EXPECT_EQ(a, *RunReplication(model, spec, n, 9, 4));
  EXPECT_NE(a, *RunReplication(model, spec, n, 9, 5));
  EXPECT_NE(a, *RunReplication(model, spec, n, 10, 4));
}

TEST(RunReplicationTest, DiscreteLaplaceKeepsIntegerSums) {
  // Single group with n = N: the privatized sum is an integer.
  const ProblemSpec spec = Spec({25}, 25, MechanismKind::kDiscreteLaplace, 0.5);
  const PopulationModel model{{Bernoulli{0.4}}};
  for (uint64_t rep = 0; rep < 200; ++rep) {
    const double e = *RunReplication(model, spec, std::vector<int64_t>{25}, 3, rep);
    EXPECT_NEAR(e * 25, std::round(e * 25), 1e-9);
  }
}

TEST(RunReplicationTest, RejectsBadDesigns) {
  const ProblemSpec spec = Spec({10, 10}, 8, MechanismKind::kLaplace);
  const PopulationModel model{{Bernoulli{0.3}, Bernoulli{0.3}}};
  EXPECT_THAT(RunReplication(model, spec, std::vector<int64_t>{4, 5}, 1, 0),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("sums to 9")));
  EXPECT_THAT(RunReplication(model, spec, std::vector<int64_t>{0, 8}, 1, 0),
              StatusIs(absl::StatusCode::kOutOfRange));
  EXPECT_THAT(RunReplication(PopulationModel{{Bernoulli{0.3}}}, spec,
                             std::vector<int64_t>{4, 4}, 1, 0),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("groups")));
  EXPECT_THAT(MonteCarloVariance(model, spec, std::vector<int64_t>{4, 4}, 999, 1),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("1000")));
}

TEST(MonteCarloVarianceTest, SingleBernoulliGroupIsUnbiased) {
  for (MechanismKind mech : kAllMechanisms) {
    const ProblemSpec spec = Spec({1000}, 50, mech);
    const PopulationModel model{{Bernoulli{0.3}}};
    absl::StatusOr<SimulationReport> r = MonteCarloVariance(
        model, spec, std::vector<int64_t>{50}, 100'000, 17);
    ASSERT_OK(r);
    EXPECT_EQ(r->true_mean, 0.3);
    EXPECT_LT(std::abs(r->empirical_bias), 4 * r->bias_standard_error)
        << MechanismName(mech);
    EXPECT_LT(std::abs(r->empirical_variance - r->analytic_variance),
              3 * r->standard_error)
        << MechanismName(mech);
  }
}

TEST(MonteCarloVarianceTest, MatchesObjectiveOnSeveralDesigns) {
  std::mt19937_64 rng(19);
  for (MechanismKind mech : kAllMechanisms) {
    for (double eps : {0.3, 3.0}) {
      ProblemSpec spec = Spec({400, 800, 1600}, 90, mech, eps);
      const PopulationModel model{
          {Bernoulli{0.1}, UniformRange{0, 1}, Bernoulli{0.45}}};
      spec = *WithModelVariances(spec, model);
      const IntegerDesign d = *SolveInteger(spec);
      absl::StatusOr<SimulationReport> r =
          MonteCarloVariance(model, spec, d.n, 100'000, 23);
      ASSERT_OK(r);
      // Analytic value from the independent oracle.
      const long double total = 2800;
      const double oracle_var =
          static_cast<double>(oracle::Objective(spec, d.n) / (total * total));
      EXPECT_NEAR(r->analytic_variance, oracle_var, 1e-12 * oracle_var);
      EXPECT_LT(std::abs(r->empirical_variance - r->analytic_variance),
                3 * r->standard_error)
          << MechanismName(mech) << " eps=" << eps;
      EXPECT_LT(std::abs(r->empirical_bias), 4 * r->bias_standard_error);
      EXPECT_LT(r->standard_error, 0.01 * r->analytic_variance);
    }
  }
}

TEST(MonteCarloVarianceTest, ZeroNoiseLeavesSamplingVariance) {
  const ProblemSpec spec = Spec({300, 700}, 50, MechanismKind::kLaplace);
  const PopulationModel model{{Bernoulli{0.2}, Bernoulli{0.5}}};
  SimulationOptions options;
  options.zero_noise_for_testing = true;
  absl::StatusOr<SimulationReport> r = MonteCarloVariance(
      model, spec, std::vector<int64_t>{20, 30}, 100'000, 29, options);
  ASSERT_OK(r);
  const double expected = 0.09 * 0.16 / 20 + 0.49 * 0.25 / 30;
  EXPECT_DOUBLE_EQ(r->analytic_variance, expected);
  EXPECT_LT(std::abs(r->empirical_variance - expected), 3 * r->standard_error);
}

TEST(MonteCarloVarianceTest, ThreadCountDoesNotChangeResult) {
  const ProblemSpec spec = Spec({300, 700}, 50, MechanismKind::kTuLap);
  const PopulationModel model{{Bernoulli{0.2}, UniformRange{1, 2}}};
  const std::vector<int64_t> n = {20, 30};
  const SimulationReport one = *MonteCarloVariance(model, spec, n, 5000, 31);
  for (int threads : {2, 3, 7}) {
    SimulationOptions options;
    options.threads = threads;
    EXPECT_EQ(*MonteCarloVariance(model, spec, n, 5000, 31, options), one);
  }
  EXPECT_NE(MonteCarloVariance(model, spec, n, 5000, 32)->empirical_variance,
            one.empirical_variance);
}

TEST(MonteCarloVarianceTest, WarnsOnNonIntegerDataUnderDiscreteLaplace) {
  const ProblemSpec spec = Spec({300, 700}, 50, MechanismKind::kDiscreteLaplace);
  const std::vector<int64_t> n = {20, 30};
  absl::StatusOr<SimulationReport> r = MonteCarloVariance(
      PopulationModel{{Bernoulli{0.2}, UniformRange{0, 1}}}, spec, n, 1000, 1);
  ASSERT_OK(r);
  ASSERT_THAT(r->warnings, SizeIs(1));
  EXPECT_THAT(r->warnings[0], HasSubstr("group 1"));
  r = MonteCarloVariance(PopulationModel{{Bernoulli{0.2}, PointMass{3}}}, spec,
                         n, 1000, 1);
  ASSERT_OK(r);
  EXPECT_THAT(r->warnings, IsEmpty());
}

TEST(SweepEpsilonTest, RowsCarryConsistentDesigns) {
  const ProblemSpec base = oracle::FourGroupSpec(MechanismKind::kLaplace, 1.0);
  const std::vector<double> grid = {0.1, 1.0, 10.0};
  const std::vector<SweepRow> rows = SweepEpsilon(base, grid);
  ASSERT_THAT(rows, SizeIs(3));
  for (size_t r = 0; r < rows.size(); ++r) {
    const SweepRow& row = rows[r];
    ASSERT_OK(row.status);
    EXPECT_EQ(row.epsilon, grid[r]);
    EXPECT_EQ(row.naive, *RoundAllocation(row.neyman, base.total_sample_size));
    ProblemSpec spec = base;
    spec.privacy.epsilon = grid[r];
    EXPECT_EQ(row.naive_objective, *ObjectiveValue(spec, row.naive));
    EXPECT_EQ(row.optimal_objective, row.optimal.objective);
    EXPECT_EQ(row.ratio, row.naive_objective / row.optimal_objective);
    EXPECT_GE(row.ratio, 1.0);
    EXPECT_GE(row.continuous_ratio, 1.0);
  }
}

TEST(SweepEpsilonTest, BadEpsilonOnlyFailsItsRow) {
  const ProblemSpec base = oracle::FourGroupSpec(MechanismKind::kTuLap, 1.0);
  const std::vector<SweepRow> rows = SweepEpsilon(base, {1.0, -1.0, 2.0});
  ASSERT_THAT(rows, SizeIs(3));
  EXPECT_OK(rows[0].status);
  EXPECT_THAT(rows[1].status, StatusIs(absl::StatusCode::kInvalidArgument));
  EXPECT_OK(rows[2].status);
}

TEST(BenchTest, AlgorithmMatchesExhaustive) {
  const ProblemSpec base = oracle::ScalabilitySpec(MechanismKind::kLaplace, 20);
  const std::vector<int64_t> etas = {12, 20};
  const std::vector<BenchRow> ball =
      BenchIntegerSearch(base, etas, BenchMethod::kAlgorithm1);
  const std::vector<BenchRow> full =
      BenchIntegerSearch(base, etas, BenchMethod::kExhaustive);
  ASSERT_THAT(ball, SizeIs(2));
  ASSERT_THAT(full, SizeIs(2));
  for (int r = 0; r < 2; ++r) {
    ASSERT_OK(ball[r].status);
    ASSERT_OK(full[r].status);
    EXPECT_EQ(ball[r].eta, etas[r]);
    EXPECT_EQ(ball[r].objective, full[r].objective);
    EXPECT_EQ(ball[r].n, full[r].n);
    EXPECT_GE(ball[r].wall_seconds, 0.0);
    ProblemSpec spec = base;
    spec.total_sample_size = etas[r];
    EXPECT_EQ(full[r].candidates,
              static_cast<double>(CountFeasibleDesigns(spec)));
  }
}

TEST(BenchTest, ExhaustiveRefusalIsReported) {
  const ProblemSpec base = oracle::ScalabilitySpec(MechanismKind::kLaplace, 48);
  const std::vector<BenchRow> rows =
      BenchIntegerSearch(base, std::vector<int64_t>{48}, BenchMethod::kExhaustive);
  ASSERT_THAT(rows, SizeIs(1));
  EXPECT_THAT(rows[0].status, StatusIs(absl::StatusCode::kResourceExhausted));
  EXPECT_EQ(rows[0].candidates, 1362649145);
}

TEST(BenchTest, MethodNames) {
  EXPECT_EQ(*ParseBenchMethod("exhaustive"), BenchMethod::kExhaustive);
  EXPECT_EQ(*ParseBenchMethod("algorithm1"), BenchMethod::kAlgorithm1);
  EXPECT_EQ(*ParseBenchMethod(BenchMethodName(BenchMethod::kAlgorithm1)),
            BenchMethod::kAlgorithm1);
  EXPECT_THAT(ParseBenchMethod("greedy"),
              StatusIs(absl::StatusCode::kInvalidArgument));
}

}  // namespace
}  // namespace dpstrata
