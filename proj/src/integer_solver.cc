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

#include "dpstrata/integer_solver.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>
#include <vector>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dpstrata/status_macros.h"

namespace dpstrata {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Box of candidate values per coordinate. The last coordinate is implied by
// the sum constraint and only checked against its range.
struct Lattice {
  std::vector<int64_t> lo;
  std::vector<int64_t> hi;
};

struct BallFilter {
  std::vector<double> center;
  double radius_sq = 0.0;
};

struct Best {
  bool found = false;
  IntegerAllocation n;
  double objective = std::numeric_limits<double>::infinity();
  int64_t evaluated = 0;
};

// Strictly better by (objective, lexicographic order).
bool Improves(double objective, absl::Span<const int64_t> n, const Best& best) {
  if (!best.found) return true;
  if (objective != best.objective) return objective < best.objective;
  return std::lexicographical_compare(n.begin(), n.end(), best.n.begin(),
                                      best.n.end());
}

void Offer(double objective, absl::Span<const int64_t> n, Best& best) {
  if (Improves(objective, n, best)) {
    best.found = true;
    best.objective = objective;
    best.n.assign(n.begin(), n.end());
  }
}

class LatticeSearch {
 public:
  using Visitor = std::function<void(absl::Span<const int64_t>)>;

  LatticeSearch(const ProblemSpec& spec, Lattice lattice,
                const BallFilter* ball)
      : spec_(spec),
        k_(spec.num_groups()),
        eta_(spec.total_sample_size),
        lattice_(std::move(lattice)),
        ball_(ball),
        terms_(k_),
        rest_lo_(k_ + 1, 0),
        rest_hi_(k_ + 1, 0),
        rest_center_(k_ + 1, 0.0) {
    for (int i = k_ - 1; i >= 0; --i) {
      rest_lo_[i] = rest_lo_[i + 1] + lattice_.lo[i];
      rest_hi_[i] = rest_hi_[i + 1] + lattice_.hi[i];
      if (ball_ != nullptr) {
        rest_center_[i] = rest_center_[i + 1] + ball_->center[i];
      }
    }
  }

  bool empty() const {
    for (int i = 0; i < k_; ++i) {
      if (lattice_.lo[i] > lattice_.hi[i]) return true;
    }
    return eta_ < rest_lo_[0] || eta_ > rest_hi_[0];
  }

  // Per-group terms over each coordinate range, evaluated once.
  void CacheTerms() {
    for (int i = 0; i < k_; ++i) {
      const int64_t size = lattice_.hi[i] - lattice_.lo[i] + 1;
      terms_[i].resize(size);
      for (int64_t v = 0; v < size; ++v) {
        terms_[i][v] = internal::GroupTerm(
            spec_, i, static_cast<double>(lattice_.lo[i] + v));
      }
    }
  }

  // Search with the first coordinate restricted to [first_lo, first_hi].
  Best Run(int64_t first_lo, int64_t first_hi, const Visitor* visit) const {
    Best best;
    IntegerAllocation n(k_);
    Recurse(0, first_lo, first_hi, 0, 0.0, 0.0, n, best, visit);
    return best;
  }

  Best RunParallel(int threads) const {
    const int64_t lo = lattice_.lo[0];
    const int64_t hi = k_ == 1 ? lo : lattice_.hi[0];
    const int64_t span = hi - lo + 1;
    const int parts =
        static_cast<int>(std::clamp<int64_t>(threads, 1, std::max<int64_t>(span, 1)));
    if (parts <= 1 || k_ == 1) return Run(lo, hi, nullptr);
    std::vector<Best> partial(parts);
    std::vector<std::thread> workers;
    for (int p = 0; p < parts; ++p) {
      const int64_t a = lo + span * p / parts;
      const int64_t b = lo + span * (p + 1) / parts - 1;
      workers.emplace_back([this, a, b, p, &partial] {
        partial[p] = Run(a, b, nullptr);
      });
    }
    for (std::thread& t : workers) t.join();
    // Chunks are in lexicographic order, so a strict-improvement reduction
    // reproduces the sequential tie-breaking.
    Best best;
    for (const Best& b : partial) {
      best.evaluated += b.evaluated;
      if (b.found) Offer(b.objective, b.n, best);
    }
    return best;
  }

 private:
  void Recurse(int j, int64_t first_lo, int64_t first_hi, int64_t sum,
               double dist_sq, double objective, IntegerAllocation& n,
               Best& best, const Visitor* visit) const {
    if (j == k_ - 1) {
      const int64_t v = eta_ - sum;
      if (v < lattice_.lo[j] || v > lattice_.hi[j]) return;
      if (ball_ != nullptr) {
        const double dv = static_cast<double>(v) - ball_->center[j];
        if (dist_sq + dv * dv > ball_->radius_sq) return;
      }
      n[j] = v;
      ++best.evaluated;
      if (visit != nullptr) {
        (*visit)(n);
      } else {
        Offer(objective + terms_[j][v - lattice_.lo[j]], n, best);
      }
      return;
    }
    const int64_t lo =
        j == 0 ? std::max(first_lo, lattice_.lo[0]) : lattice_.lo[j];
    const int64_t hi =
        j == 0 ? std::min(first_hi, lattice_.hi[0]) : lattice_.hi[j];
    const int remaining_dims = k_ - j - 1;
    for (int64_t v = lo; v <= hi; ++v) {
      const int64_t remaining = eta_ - sum - v;
      if (remaining < rest_lo_[j + 1]) break;
      if (remaining > rest_hi_[j + 1]) continue;
      double next_dist = dist_sq;
      if (ball_ != nullptr) {
        const double dv = static_cast<double>(v) - ball_->center[j];
        next_dist += dv * dv;
        // The remaining coordinates must sum to `remaining`; the closest such
        // point to their centre is the uniform shift.
        const double shift =
            static_cast<double>(remaining) - rest_center_[j + 1];
        if (next_dist + shift * shift / remaining_dims > ball_->radius_sq) {
          continue;
        }
      }
      n[j] = v;
      const double term =
          visit != nullptr ? 0.0 : terms_[j][v - lattice_.lo[j]];
      Recurse(j + 1, first_lo, first_hi, sum + v, next_dist, objective + term,
              n, best, visit);
    }
  }

  const ProblemSpec& spec_;
  const int k_;
  const int64_t eta_;
  Lattice lattice_;
  const BallFilter* ball_;
  std::vector<std::vector<double>> terms_;
  std::vector<int64_t> rest_lo_;
  std::vector<int64_t> rest_hi_;
  std::vector<double> rest_center_;
};

// Ball radius enlarged by a rounding margin; only ever admits extra
// candidates, never drops one.
double Inflate(double r) { return r * (1 + 1e-9) + 1e-9; }

Lattice BallLattice(const ProblemSpec& spec, absl::Span<const double> center,
                    double r) {
  const int k = spec.num_groups();
  const double reach = Inflate(r);
  Lattice lattice{std::vector<int64_t>(k), std::vector<int64_t>(k)};
  for (int i = 0; i < k; ++i) {
    lattice.lo[i] = std::max<int64_t>(
        1, static_cast<int64_t>(std::ceil(center[i] - reach)));
    lattice.hi[i] = std::min<int64_t>(
        spec.group_sizes[i], static_cast<int64_t>(std::floor(center[i] + reach)));
  }
  return lattice;
}

Lattice GridLattice(const ProblemSpec& spec, absl::Span<const double> center,
                    int64_t widen) {
  const int k = spec.num_groups();
  Lattice lattice{std::vector<int64_t>(k), std::vector<int64_t>(k)};
  for (int i = 0; i < k; ++i) {
    lattice.lo[i] = std::max<int64_t>(
        1, static_cast<int64_t>(std::floor(center[i])) - widen);
    lattice.hi[i] = std::min<int64_t>(
        spec.group_sizes[i], static_cast<int64_t>(std::ceil(center[i])) + widen);
  }
  // The last group absorbs the remainder.
  lattice.lo[k - 1] = 1;
  lattice.hi[k - 1] = spec.group_sizes[k - 1];
  return lattice;
}

BallFilter MakeBall(absl::Span<const double> center, double r) {
  const double reach = Inflate(r);
  return BallFilter{std::vector<double>(center.begin(), center.end()),
                    reach * reach};
}

double RelativeGap(double value, double reference) {
  return (value - reference) / reference;
}

// Compositions of eta into k parts with 1 <= n_i <= N_i, by dynamic
// programming over prefix sums.
template <typename T, typename Add, typename Sub>
T CountCompositions(const ProblemSpec& spec, Add add, Sub sub) {
  const int64_t eta = spec.total_sample_size;
  // ways[s] = number of ways the groups processed so far sum to s.
  std::vector<T> ways(eta + 1, T(0));
  ways[0] = T(1);
  for (int i = 0; i < spec.num_groups(); ++i) {
    std::vector<T> prefix(eta + 2, T(0));
    for (int64_t s = 0; s <= eta; ++s) prefix[s + 1] = add(prefix[s], ways[s]);
    std::vector<T> next(eta + 1, T(0));
    const int64_t cap = spec.group_sizes[i];
    for (int64_t s = 1; s <= eta; ++s) {
      // Sum of ways[s - v] for v in [1, min(cap, s)].
      next[s] = sub(prefix[s], prefix[std::max<int64_t>(0, s - cap)]);
    }
    ways = std::move(next);
  }
  return ways[eta];
}

}  // namespace

std::string LambdaModeName(LambdaMode mode) {
  return mode == LambdaMode::kPaper ? "paper" : "conservative";
}

absl::StatusOr<LambdaMode> ParseLambdaMode(absl::string_view name) {
  const std::string lower = absl::AsciiStrToLower(name);
  if (lower == "paper") return LambdaMode::kPaper;
  if (lower == "conservative") return LambdaMode::kConservative;
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown lambda mode '", name, "' (expected paper or conservative)"));
}

std::string CertificateName(Certificate certificate) {
  switch (certificate) {
    case Certificate::kBallSearch:
      return "ball_search";
    case Certificate::kExhaustive:
      return "exhaustive";
    case Certificate::kNearestIntegerOnly:
      return "nearest_integer_only";
  }
  return "unknown";
}

absl::StatusOr<IntegerDesign> NearestIntegerCandidates(
    const ProblemSpec& spec, const ContinuousDesign& x_star) {
  RETURN_IF_ERROR(ValidateProblemSpec(spec));
  if (static_cast<int>(x_star.x.size()) != spec.num_groups()) {
    return absl::InvalidArgumentError("continuous design has the wrong arity");
  }
  // Widen the grid when the floor/ceil box holds no feasible design, which
  // happens when several x_i fall below 1.
  const int64_t max_size =
      *std::max_element(spec.group_sizes.begin(), spec.group_sizes.end());
  for (int64_t widen = 0; widen <= 2 * max_size;
       widen = widen == 0 ? 1 : 2 * widen) {
    LatticeSearch search(spec, GridLattice(spec, x_star.x, widen), nullptr);
    if (search.empty()) continue;
    search.CacheTerms();
    Best best = search.RunParallel(1);
    if (!best.found) continue;
    IntegerDesign design;
    design.n = std::move(best.n);
    design.objective = best.objective;
    design.continuous_objective = x_star.objective;
    design.grid_candidates = best.evaluated;
    design.certificate = Certificate::kNearestIntegerOnly;
    design.optimality_gap = RelativeGap(best.objective, x_star.objective);
    return design;
  }
  return absl::InternalError(
      "no feasible design in the floor/ceil grid around the continuous "
      "optimum");
}

absl::StatusOr<SearchRadiusResult> SearchRadius(
    const ProblemSpec& spec, const ContinuousDesign& x_star,
    absl::Span<const int64_t> n_init, LambdaMode mode) {
  const int k = spec.num_groups();
  ASSIGN_OR_RETURN(const double g_init, ObjectiveValue(spec, n_init));
  double gap = g_init - x_star.objective;
  if (gap < -1e-9 * std::abs(x_star.objective)) {
    return absl::InternalError(absl::StrCat(
        "integer design beats the continuous optimum by ", -gap,
        "; the continuous solution is not optimal"));
  }
  gap = std::max(gap, 0.0);

  auto smallest_curvature = [&](double reach) {
    double lambda = std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i) {
      // Entries decrease in x_i, so the minimum over the box sits at its top.
      const double top = std::min(x_star.x[i] + reach,
                                  static_cast<double>(spec.group_sizes[i]));
      lambda = std::min(lambda, internal::GroupCurvature(spec, i, top));
    }
    return lambda;
  };
  auto radius_for = [&](double lambda) {
    if (gap == 0) return 0.0;
    if (!(lambda > 0)) return std::numeric_limits<double>::infinity();
    return std::sqrt(2 * gap / lambda);
  };

  SearchRadiusResult result;
  result.lambda = smallest_curvature(0.0);
  result.radius = radius_for(result.lambda);
  if (mode == LambdaMode::kPaper || result.radius == 0 ||
      !std::isfinite(result.radius)) {
    return result;
  }
  double reach = result.radius;
  for (int round = 1; round <= 10; ++round) {
    const double box = 1.01 * reach;
    const double lambda = smallest_curvature(box);
    const double r = radius_for(lambda);
    if (r <= box) {
      // lambda bounds the curvature on a box containing the whole ball.
      return SearchRadiusResult{r, lambda, round};
    }
    reach = r;
    if (!std::isfinite(r)) break;
  }
  const double lambda = smallest_curvature(std::numeric_limits<double>::infinity());
  return SearchRadiusResult{radius_for(lambda), lambda, -1};
}

int64_t EnumerateBall(const ProblemSpec& spec, absl::Span<const double> x_star,
                      double r,
                      const std::function<void(absl::Span<const int64_t>)>&
                          visit) {
  if (!(r >= 0)) return 0;
  const BallFilter ball = MakeBall(x_star, r);
  LatticeSearch search(spec, BallLattice(spec, x_star, r), &ball);
  if (search.empty()) return 0;
  const LatticeSearch::Visitor visitor = visit;
  return search.Run(std::numeric_limits<int64_t>::min() / 4,
                    std::numeric_limits<int64_t>::max() / 4, &visitor)
      .evaluated;
}

uint64_t CountFeasibleDesigns(const ProblemSpec& spec) {
  constexpr uint64_t kMax = std::numeric_limits<uint64_t>::max();
  return CountCompositions<uint64_t>(
      spec, [](uint64_t a, uint64_t b) { return a > kMax - b ? kMax : a + b; },
      [](uint64_t hi, uint64_t lo) { return hi == kMax ? kMax : hi - lo; });
}

double ApproximateFeasibleDesigns(const ProblemSpec& spec) {
  return static_cast<double>(CountCompositions<long double>(
      spec, [](long double a, long double b) { return a + b; },
      [](long double hi, long double lo) { return hi - lo; }));
}

absl::StatusOr<IntegerDesign> ExhaustiveSearch(
    const ProblemSpec& spec, const ExhaustiveOptions& options) {
  RETURN_IF_ERROR(ValidateProblemSpec(spec));
  const uint64_t count = CountFeasibleDesigns(spec);
  if (count > options.budget) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "exhaustive search would evaluate ",
        count == std::numeric_limits<uint64_t>::max()
            ? absl::StrFormat("about %.6g", ApproximateFeasibleDesigns(spec))
            : absl::StrCat(count),
        " candidate designs, above the budget of ", options.budget));
  }
  const int k = spec.num_groups();
  const int64_t eta = spec.total_sample_size;
  Lattice lattice{std::vector<int64_t>(k, 1), std::vector<int64_t>(k)};
  for (int i = 0; i < k; ++i) {
    lattice.hi[i] = std::min<int64_t>(spec.group_sizes[i], eta - (k - 1));
  }
  LatticeSearch search(spec, std::move(lattice), nullptr);
  search.CacheTerms();
  Best best = search.RunParallel(options.threads);
  if (!best.found) {
    return absl::InternalError("no feasible design found");
  }
  IntegerDesign design;
  design.n = std::move(best.n);
  design.objective = best.objective;
  design.continuous_objective = kNaN;
  design.optimality_gap = kNaN;
  design.candidates_evaluated = best.evaluated;
  design.certificate = Certificate::kExhaustive;
  return design;
}

absl::StatusOr<IntegerDesign> SolveIntegerFrom(
    const ProblemSpec& spec, const ContinuousDesign& x_star,
    const IntegerSolveOptions& options) {
  ASSIGN_OR_RETURN(IntegerDesign init, NearestIntegerCandidates(spec, x_star));
  init.lambda_mode = options.lambda_mode;
  if (options.gap_threshold.has_value() &&
      init.optimality_gap <= *options.gap_threshold) {
    return init;
  }
  ASSIGN_OR_RETURN(const SearchRadiusResult radius,
                   SearchRadius(spec, x_star, init.n, options.lambda_mode));
  if (!std::isfinite(radius.radius)) {
    // No curvature bound: only the exhaustive search certifies optimality.
    ASSIGN_OR_RETURN(
        IntegerDesign full,
        ExhaustiveSearch(spec, ExhaustiveOptions{options.exhaustive_budget,
                                                 options.threads}));
    full.continuous_objective = x_star.objective;
    full.optimality_gap = RelativeGap(full.objective, x_star.objective);
    full.grid_candidates = init.grid_candidates;
    full.radius = radius.radius;
    full.lambda = radius.lambda;
    full.lambda_mode = options.lambda_mode;
    return full;
  }

  const BallFilter ball = MakeBall(x_star.x, radius.radius);
  LatticeSearch search(spec, BallLattice(spec, x_star.x, radius.radius),
                       &ball);
  Best best;
  best.found = true;
  best.n = init.n;
  best.objective = init.objective;
  if (!search.empty()) {
    search.CacheTerms();
    const Best found = search.RunParallel(options.threads);
    best.evaluated = found.evaluated;
    if (found.found) Offer(found.objective, found.n, best);
  }

  IntegerDesign design;
  design.n = std::move(best.n);
  design.objective = best.objective;
  design.continuous_objective = x_star.objective;
  design.radius = radius.radius;
  design.lambda = radius.lambda;
  design.lambda_mode = options.lambda_mode;
  design.candidates_evaluated = best.evaluated;
  design.grid_candidates = init.grid_candidates;
  design.certificate = Certificate::kBallSearch;
  design.optimality_gap = RelativeGap(design.objective, x_star.objective);
  return design;
}

absl::StatusOr<IntegerDesign> SolveInteger(const ProblemSpec& spec,
                                           const IntegerSolveOptions& options) {
  ASSIGN_OR_RETURN(const ContinuousDesign x_star,
                   SolveContinuous(spec, options.newton));
  return SolveIntegerFrom(spec, x_star, options);
}

}  // namespace dpstrata
