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

#include "dpstrata/config.h"

#include <random>
#include <string>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "status_matchers.h"

namespace dpstrata {
namespace {

using ::dpstrata::testing::StatusIs;
using ::testing::ElementsAre;
using ::testing::HasSubstr;

constexpr char kMinimal[] = R"(
eta = 30
group.0.size = 100
group.0.sigma2 = 0.1
group.1.size = 200
group.1.sigma2 = 0.2
)";

absl::Status ParseError(const std::string& text) {
  return ParseRunConfig(text).status();
}

TEST(ParseRunConfigTest, MinimalWithDefaults) {
  absl::StatusOr<RunConfig> c = ParseRunConfig(kMinimal);
  ASSERT_OK(c);
  EXPECT_EQ(c->problem.total_sample_size, 30);
  EXPECT_THAT(c->problem.group_sizes, ElementsAre(100, 200));
  EXPECT_THAT(c->problem.variances, ElementsAre(0.1, 0.2));
  EXPECT_EQ(c->problem.mechanism, MechanismKind::kLaplace);
  EXPECT_EQ(c->problem.weight_mode, WeightMode::kPopulationMean);
  EXPECT_EQ(c->problem.privacy.epsilon, 1.0);
  EXPECT_EQ(c->reps, 100000);
  EXPECT_FALSE(c->seed.has_value());
  EXPECT_EQ(c->lambda_mode, LambdaMode::kConservative);
  EXPECT_TRUE(c->design.empty());
  EXPECT_THAT(EffectiveMechanisms(*c), ElementsAre(MechanismKind::kLaplace));
}

TEST(ParseRunConfigTest, AllKeys) {
  absl::StatusOr<RunConfig> c = ParseRunConfig(R"(
# comment line
ETA = 10   # trailing comment
epsilon = 0.5
sensitivity = 2
mechanism = tulap
weight_mode = custom
group.0.size = 50
group.0.alpha = 2
group.0.model = bernoulli:0.25
group.0.n = 4
group.1.size = 60
group.1.sigma2 = 0.3
group.1.alpha = 0.5
group.1.n = 6
eps_grid = 0.1, 1,10
mechanisms = dlap, laplace
reps = 5000
seed = 42
zero_noise_for_testing = true
lambda_mode = paper
gap_threshold = 0.01
output_path = out.csv
eta_grid = 5, 10
bench_methods = exhaustive
exhaustive_budget = 1234
)");
  ASSERT_OK(c);
  const RunConfig& r = *c;
  EXPECT_EQ(r.problem.total_sample_size, 10);
  EXPECT_EQ(r.problem.privacy.epsilon, 0.5);
  EXPECT_EQ(r.problem.privacy.sensitivity, 2);
  EXPECT_EQ(r.problem.mechanism, MechanismKind::kTuLap);
  EXPECT_EQ(r.problem.weight_mode, WeightMode::kCustom);
  EXPECT_THAT(r.problem.custom_weights, ElementsAre(2, 0.5));
  // sigma2 comes from the model when not given.
  EXPECT_THAT(r.problem.variances, ElementsAre(0.1875, 0.3));
  ASSERT_EQ(r.models.size(), 2u);
  EXPECT_EQ(r.models[0], GroupModel{Bernoulli{0.25}});
  EXPECT_FALSE(r.models[1].has_value());
  EXPECT_THAT(r.design, ElementsAre(4, 6));
  EXPECT_THAT(r.eps_grid, ElementsAre(0.1, 1, 10));
  EXPECT_THAT(EffectiveMechanisms(r),
              ElementsAre(MechanismKind::kDiscreteLaplace, MechanismKind::kLaplace));
  EXPECT_EQ(r.reps, 5000);
  EXPECT_EQ(r.seed, 42u);
  EXPECT_TRUE(r.zero_noise_for_testing);
  EXPECT_EQ(r.lambda_mode, LambdaMode::kPaper);
  EXPECT_EQ(r.gap_threshold, 0.01);
  EXPECT_EQ(r.output_path, "out.csv");
  EXPECT_THAT(r.eta_grid, ElementsAre(5, 10));
  EXPECT_THAT(r.bench_methods, ElementsAre(BenchMethod::kExhaustive));
  EXPECT_EQ(r.exhaustive_budget, 1234u);
}

TEST(ParseRunConfigTest, SyntaxErrorsNameTheLine) {
  EXPECT_THAT(ParseError("eta = 3\nnonsense\n"),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("line 2")));
  EXPECT_THAT(ParseError(" = 4\n"),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("empty key")));
  EXPECT_THAT(ParseError(std::string(kMinimal) + "eta = 31\n"),
              StatusIs(absl::StatusCode::kInvalidArgument,
                       HasSubstr("duplicate key 'eta' (first set on line 2)")));
  EXPECT_THAT(ParseError(std::string(kMinimal) + "colour = red\n"),
              StatusIs(absl::StatusCode::kInvalidArgument,
                       HasSubstr("line 7: unknown key 'colour'")));
}

TEST(ParseRunConfigTest, FieldErrors) {
  struct Case {
    std::string extra;
    std::string message;
  };
  const std::vector<Case> cases = {
      {"epsilon = abc", "epsilon"},
      {"epsilon = -1", "epsilon"},
      {"epsilon = inf", "epsilon"},
      {"mechanism = gauss", "gauss"},
      {"weight_mode = best", "best"},
      {"reps = 10", "reps"},
      {"reps = many", "reps"},
      {"seed = -3", "seed"},
      {"gap_threshold = -0.1", "gap_threshold"},
      {"zero_noise_for_testing = maybe", "zero_noise_for_testing"},
      {"lambda_mode = loose", "loose"},
      {"eps_grid = 1, -2", "eps_grid"},
      {"eta_grid = 1", "eta_grid"},
      {"eta_grid = 5000", "eta_grid"},
      {"bench_methods = greedy", "greedy"},
      {"group.0.alpha = 1", "custom"},
      {"group.0.n = 10", "every group"},
      {"group.0.n = 10\ngroup.1.n = 10", "sums to 20"},
      {"group.0.n = 101\ngroup.1.n = -71", "group.<i>.n: allocation for group 0"},
      {"group.0.model = bernoulli:3", "group.0.model"},
      {"group.3.size = 10\ngroup.3.sigma2 = 1", "group.2.size"},
      {"group.x.size = 1", "group.<index>.<field>"},
  };
  for (const Case& c : cases) {
    EXPECT_THAT(ParseError(std::string(kMinimal) + c.extra + "\n"),
                StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr(c.message)))
        << c.extra;
  }
}

TEST(ParseRunConfigTest, ProblemInvariantsNameTheField) {
  EXPECT_THAT(ParseError("group.0.size = 10\ngroup.0.sigma2 = 1\n"),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("eta")));
  // eta < k.
  EXPECT_THAT(ParseError("eta = 1\ngroup.0.size = 10\ngroup.0.sigma2 = 1\n"
                         "group.1.size = 10\ngroup.1.sigma2 = 1\n"),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("eta")));
  // eta > N.
  EXPECT_THAT(ParseError("eta = 21\ngroup.0.size = 10\ngroup.0.sigma2 = 1\n"
                         "group.1.size = 10\ngroup.1.sigma2 = 1\n"),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("eta")));
  EXPECT_THAT(ParseError("eta = 5\ngroup.0.size = 10\ngroup.0.sigma2 = -1\n"),
              StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("sigma")));
  EXPECT_THAT(ParseError("eta = 5\ngroup.0.size = 0\ngroup.0.sigma2 = 1\n"),
              StatusIs(absl::StatusCode::kInvalidArgument));
  EXPECT_THAT(ParseError("eta = 5\ngroup.0.size = 10\n"),
              StatusIs(absl::StatusCode::kInvalidArgument,
                       HasSubstr("group.0.sigma2")));
  EXPECT_THAT(ParseError(std::string(kMinimal) + "weight_mode = custom\n"),
              StatusIs(absl::StatusCode::kInvalidArgument,
                       HasSubstr("group.0.alpha")));
}

TEST(LoadRunConfigTest, MissingFile) {
  EXPECT_THAT(LoadRunConfig("/nonexistent/x.cfg"),
              StatusIs(absl::StatusCode::kNotFound, HasSubstr("x.cfg")));
}

TEST(LoadRunConfigTest, ShippedConfigsParseAndRoundTrip) {
  for (const char* name :
       {"four_groups.cfg", "simulate.cfg", "interpolation.cfg", "scalability.cfg"}) {
    absl::StatusOr<RunConfig> c =
        LoadRunConfig(std::string(DPSTRATA_SOURCE_DIR) + "/configs/" + name);
    ASSERT_OK(c) << name;
    absl::StatusOr<RunConfig> back = ParseRunConfig(RenderRunConfig(*c));
    ASSERT_OK(back) << name;
    EXPECT_EQ(*back, *c) << name;
  }
}

RunConfig RandomConfig(std::mt19937_64& rng) {
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<>(lo, hi)(rng);
  };
  auto coin = [&] { return std::bernoulli_distribution(0.5)(rng); };
  RunConfig c;
  ProblemSpec& p = c.problem;
  const int k = std::uniform_int_distribution<>(1, 6)(rng);
  p.mechanism = static_cast<MechanismKind>(rng() % 3);
  p.weight_mode = static_cast<WeightMode>(rng() % 4);
  p.privacy.epsilon = std::exp(uniform(-5, 5));
  p.privacy.sensitivity = coin() ? 1.0 : uniform(0.1, 3);
  c.models.assign(k, std::nullopt);
  for (int i = 0; i < k; ++i) {
    p.group_sizes.push_back(std::uniform_int_distribution<int64_t>(2, 10000)(rng));
    if (coin()) {
      const GroupModel m = coin() ? GroupModel{Bernoulli{uniform(0, 1)}}
                                  : GroupModel{UniformRange{-uniform(0, 5), uniform(0, 5)}};
      c.models[i] = m;
      p.variances.push_back(ModelVariance(m));
    } else {
      p.variances.push_back(uniform(0, 2));
    }
    if (p.weight_mode == WeightMode::kCustom) {
      p.custom_weights.push_back(uniform(0.1, 10));
    }
  }
  if (p.weight_mode == WeightMode::kUnitFree) {
    for (double& v : p.variances) v = std::max(v, 1e-3);
  }
  int64_t total = 0;
  for (int64_t n : p.group_sizes) total += n;
  p.total_sample_size = std::uniform_int_distribution<int64_t>(k, total)(rng);
  if (coin()) {
    // A fixed design: one sample each, the rest greedily.
    int64_t left = p.total_sample_size - k;
    for (int i = 0; i < k; ++i) {
      const int64_t extra = std::min(left, p.group_sizes[i] - 1);
      c.design.push_back(1 + extra);
      left -= extra;
    }
  }
  if (coin()) {
    for (int j = 0; j < 3; ++j) c.eps_grid.push_back(std::exp(uniform(-3, 3)));
  }
  if (coin()) c.mechanisms = {MechanismKind::kTuLap, MechanismKind::kLaplace};
  c.reps = std::uniform_int_distribution<int64_t>(1000, 1'000'000)(rng);
  if (coin()) c.seed = rng();
  c.zero_noise_for_testing = coin();
  c.lambda_mode = coin() ? LambdaMode::kPaper : LambdaMode::kConservative;
  if (coin()) c.gap_threshold = uniform(0, 1);
  if (coin()) c.output_path = "results/run.csv";
  if (coin()) c.eta_grid = {k, p.total_sample_size};
  if (coin()) c.bench_methods = {BenchMethod::kExhaustive, BenchMethod::kAlgorithm1};
  c.exhaustive_budget = rng() % 100'000'000;
  return c;
}

TEST(RenderRunConfigTest, RoundTripsRandomConfigs) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const RunConfig c = RandomConfig(rng);
    const std::string text = RenderRunConfig(c);
    absl::StatusOr<RunConfig> back = ParseRunConfig(text);
    ASSERT_OK(back) << text;
    EXPECT_EQ(*back, c) << text;
  }
}

}  // namespace
}  // namespace dpstrata
