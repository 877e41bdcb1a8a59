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

#include <fstream>
#include <map>
#include <sstream>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "dpstrata/status_macros.h"

namespace dpstrata {
namespace {

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

using EntryMap = std::map<std::string, Entry>;

absl::Status FieldError(absl::string_view key, const Entry& e,
                        absl::string_view what) {
  return absl::InvalidArgumentError(absl::StrCat(
      key, " (line ", e.line, "): ", what, ", got '", e.value, "'"));
}

absl::StatusOr<double> ToDouble(absl::string_view key, const Entry& e) {
  double v;
  if (!absl::SimpleAtod(e.value, &v) || !std::isfinite(v)) {
    return FieldError(key, e, "expected a finite number");
  }
  return v;
}

absl::StatusOr<int64_t> ToInt(absl::string_view key, const Entry& e) {
  int64_t v;
  if (!absl::SimpleAtoi(e.value, &v)) {
    return FieldError(key, e, "expected an integer");
  }
  return v;
}

absl::StatusOr<uint64_t> ToUint(absl::string_view key, const Entry& e) {
  uint64_t v;
  if (!absl::SimpleAtoi(e.value, &v)) {
    return FieldError(key, e, "expected a nonnegative integer");
  }
  return v;
}

std::vector<std::string> ListItems(const Entry& e) {
  std::vector<std::string> items;
  for (absl::string_view part : absl::StrSplit(e.value, ',')) {
    part = absl::StripAsciiWhitespace(part);
    if (!part.empty()) items.emplace_back(part);
  }
  return items;
}

// Fetches a key and marks it consumed; nullptr when absent.
Entry* Take(EntryMap& entries, const std::string& key) {
  auto it = entries.find(key);
  if (it == entries.end()) return nullptr;
  it->second.used = true;
  return &it->second;
}

absl::StatusOr<EntryMap> Tokenize(absl::string_view text) {
  EntryMap entries;
  int line_no = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++line_no;
    if (size_t hash = line.find('#'); hash != absl::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = absl::StripAsciiWhitespace(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == absl::string_view::npos) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": expected 'key = value', got '",
                       line, "'"));
    }
    const std::string key =
        absl::AsciiStrToLower(absl::StripAsciiWhitespace(line.substr(0, eq)));
    const std::string value(absl::StripAsciiWhitespace(line.substr(eq + 1)));
    if (key.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": empty key"));
    }
    auto [it, inserted] = entries.emplace(key, Entry{value, line_no});
    if (!inserted) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": duplicate key '", key,
                       "' (first set on line ", it->second.line, ")"));
    }
  }
  return entries;
}

absl::Status ParseGroups(EntryMap& entries, RunConfig& config) {
  // Highest group index mentioned anywhere, so gaps are caught.
  int max_index = -1;
  for (const auto& [key, entry] : entries) {
    if (!absl::StartsWith(key, "group.")) continue;
    const std::vector<std::string> parts = absl::StrSplit(key, '.');
    int index;
    if (parts.size() != 3 || !absl::SimpleAtoi(parts[1], &index) ||
        index < 0) {
      return absl::InvalidArgumentError(absl::StrCat(
          key, " (line ", entry.line,
          "): expected group.<index>.<field> with a nonnegative index"));
    }
    max_index = std::max(max_index, index);
  }
  const int k = max_index + 1;
  ProblemSpec& p = config.problem;
  p.group_sizes.assign(k, 0);
  p.variances.assign(k, 0.0);
  config.models.assign(k, std::nullopt);
  std::vector<std::optional<double>> alphas(k);
  std::vector<std::optional<int64_t>> design(k);
  for (int i = 0; i < k; ++i) {
    const std::string prefix = absl::StrCat("group.", i, ".");
    Entry* size = Take(entries, prefix + "size");
    if (size == nullptr) {
      return absl::InvalidArgumentError(absl::StrCat(
          prefix, "size: missing (groups must be numbered 0..", k - 1,
          " without gaps)"));
    }
    ASSIGN_OR_RETURN(p.group_sizes[i], ToInt(prefix + "size", *size));
    if (Entry* e = Take(entries, prefix + "model")) {
      absl::StatusOr<GroupModel> model = ParseGroupModel(e->value);
      if (!model.ok()) {
        return FieldError(prefix + "model", *e, model.status().message());
      }
      config.models[i] = *model;
    }
    if (Entry* e = Take(entries, prefix + "sigma2")) {
      ASSIGN_OR_RETURN(p.variances[i], ToDouble(prefix + "sigma2", *e));
    } else if (config.models[i].has_value()) {
      p.variances[i] = ModelVariance(*config.models[i]);
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat(prefix, "sigma2: missing (give sigma2 or a model)"));
    }
    if (Entry* e = Take(entries, prefix + "alpha")) {
      ASSIGN_OR_RETURN(alphas[i], ToDouble(prefix + "alpha", *e));
    }
    if (Entry* e = Take(entries, prefix + "n")) {
      ASSIGN_OR_RETURN(design[i], ToInt(prefix + "n", *e));
    }
  }

  const bool any_alpha =
      std::any_of(alphas.begin(), alphas.end(), [](auto& a) { return a; });
  if (p.weight_mode == WeightMode::kCustom) {
    p.custom_weights.resize(k);
    for (int i = 0; i < k; ++i) {
      if (!alphas[i]) {
        return absl::InvalidArgumentError(absl::StrCat(
            "group.", i, ".alpha: missing (required for weight_mode = custom)"));
      }
      p.custom_weights[i] = *alphas[i];
    }
  } else if (any_alpha) {
    return absl::InvalidArgumentError(
        "group.<i>.alpha: only allowed with weight_mode = custom");
  }

  const int given = static_cast<int>(
      std::count_if(design.begin(), design.end(), [](auto& d) { return d; }));
  if (given > 0 && given < k) {
    return absl::InvalidArgumentError(
        "group.<i>.n: give a fixed design for every group or for none");
  }
  if (given == k) {
    for (auto& d : design) config.design.push_back(*d);
  }
  return absl::OkStatus();
}

absl::Status ParseEntries(EntryMap& entries, RunConfig& config) {
  ProblemSpec& p = config.problem;
  if (Entry* e = Take(entries, "mechanism")) {
    ASSIGN_OR_RETURN(p.mechanism, ParseMechanism(e->value));
  }
  if (Entry* e = Take(entries, "weight_mode")) {
    ASSIGN_OR_RETURN(p.weight_mode, ParseWeightMode(e->value));
  }
  if (Entry* e = Take(entries, "epsilon")) {
    ASSIGN_OR_RETURN(p.privacy.epsilon, ToDouble("epsilon", *e));
  }
  if (Entry* e = Take(entries, "sensitivity")) {
    ASSIGN_OR_RETURN(p.privacy.sensitivity, ToDouble("sensitivity", *e));
  }
  if (Entry* e = Take(entries, "eta")) {
    ASSIGN_OR_RETURN(p.total_sample_size, ToInt("eta", *e));
  } else {
    return absl::InvalidArgumentError("eta: missing total sample size");
  }
  RETURN_IF_ERROR(ParseGroups(entries, config));

  if (Entry* e = Take(entries, "eps_grid")) {
    for (const std::string& item : ListItems(*e)) {
      double v;
      if (!absl::SimpleAtod(item, &v) || !(v > 0) || !std::isfinite(v)) {
        return FieldError("eps_grid", *e, "expected positive numbers");
      }
      config.eps_grid.push_back(v);
    }
  }
  if (Entry* e = Take(entries, "mechanisms")) {
    for (const std::string& item : ListItems(*e)) {
      ASSIGN_OR_RETURN(MechanismKind m, ParseMechanism(item));
      config.mechanisms.push_back(m);
    }
  }
  if (Entry* e = Take(entries, "reps")) {
    ASSIGN_OR_RETURN(config.reps, ToInt("reps", *e));
    if (config.reps < 1000) {
      return FieldError("reps", *e, "need at least 1000 replications");
    }
  }
  if (Entry* e = Take(entries, "seed")) {
    ASSIGN_OR_RETURN(config.seed, ToUint("seed", *e));
  }
  if (Entry* e = Take(entries, "zero_noise_for_testing")) {
    const std::string v = absl::AsciiStrToLower(e->value);
    if (v == "true" || v == "1") {
      config.zero_noise_for_testing = true;
    } else if (v == "false" || v == "0") {
      config.zero_noise_for_testing = false;
    } else {
      return FieldError("zero_noise_for_testing", *e, "expected true or false");
    }
  }
  if (Entry* e = Take(entries, "lambda_mode")) {
    ASSIGN_OR_RETURN(config.lambda_mode, ParseLambdaMode(e->value));
  }
  if (Entry* e = Take(entries, "gap_threshold")) {
    ASSIGN_OR_RETURN(const double gap, ToDouble("gap_threshold", *e));
    if (gap < 0) return FieldError("gap_threshold", *e, "must be >= 0");
    config.gap_threshold = gap;
  }
  if (Entry* e = Take(entries, "output_path")) config.output_path = e->value;
  if (Entry* e = Take(entries, "eta_grid")) {
    for (const std::string& item : ListItems(*e)) {
      int64_t v;
      if (!absl::SimpleAtoi(item, &v)) {
        return FieldError("eta_grid", *e, "expected integers");
      }
      config.eta_grid.push_back(v);
    }
  }
  if (Entry* e = Take(entries, "bench_methods")) {
    for (const std::string& item : ListItems(*e)) {
      ASSIGN_OR_RETURN(BenchMethod m, ParseBenchMethod(item));
      config.bench_methods.push_back(m);
    }
  }
  if (Entry* e = Take(entries, "exhaustive_budget")) {
    ASSIGN_OR_RETURN(config.exhaustive_budget, ToUint("exhaustive_budget", *e));
  }

  for (const auto& [key, entry] : entries) {
    if (!entry.used) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", entry.line, ": unknown key '", key, "'"));
    }
  }
  RETURN_IF_ERROR(ValidateProblemSpec(p));
  for (int64_t eta : config.eta_grid) {
    ProblemSpec bench = p;
    bench.total_sample_size = eta;
    absl::Status s = ValidateProblemSpec(bench);
    if (!s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("eta_grid: ", eta, " is infeasible: ", s.message()));
    }
  }
  if (!config.design.empty()) {
    if (absl::Status s = ValidateAllocationBounds(p, config.design); !s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("group.<i>.n: ", s.message()));
    }
    int64_t total = 0;
    for (int64_t v : config.design) total += v;
    if (total != p.total_sample_size) {
      return absl::InvalidArgumentError(absl::StrCat(
          "group.<i>.n: fixed design sums to ", total, ", expected eta=",
          p.total_sample_size));
    }
  }
  return absl::OkStatus();
}

std::string Num(double v) { return absl::StrFormat("%.17g", v); }

}  // namespace

absl::StatusOr<RunConfig> ParseRunConfig(absl::string_view text) {
  ASSIGN_OR_RETURN(EntryMap entries, Tokenize(text));
  RunConfig config;
  RETURN_IF_ERROR(ParseEntries(entries, config));
  return config;
}

absl::StatusOr<RunConfig> LoadRunConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot open config '", path, "'"));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseRunConfig(buffer.str());
}

std::string RenderRunConfig(const RunConfig& c) {
  const ProblemSpec& p = c.problem;
  std::string out;
  absl::StrAppend(&out, "eta = ", p.total_sample_size, "\n");
  absl::StrAppend(&out, "epsilon = ", Num(p.privacy.epsilon), "\n");
  absl::StrAppend(&out, "sensitivity = ", Num(p.privacy.sensitivity), "\n");
  absl::StrAppend(&out, "mechanism = ", MechanismName(p.mechanism), "\n");
  absl::StrAppend(&out, "weight_mode = ", WeightModeName(p.weight_mode), "\n");
  for (int i = 0; i < p.num_groups(); ++i) {
    const std::string prefix = absl::StrCat("group.", i, ".");
    absl::StrAppend(&out, prefix, "size = ", p.group_sizes[i], "\n");
    absl::StrAppend(&out, prefix, "sigma2 = ", Num(p.variances[i]), "\n");
    if (p.weight_mode == WeightMode::kCustom) {
      absl::StrAppend(&out, prefix, "alpha = ", Num(p.custom_weights[i]), "\n");
    }
    if (i < static_cast<int>(c.models.size()) && c.models[i].has_value()) {
      absl::StrAppend(&out, prefix, "model = ", RenderGroupModel(*c.models[i]),
                      "\n");
    }
    if (!c.design.empty()) {
      absl::StrAppend(&out, prefix, "n = ", c.design[i], "\n");
    }
  }
  if (!c.eps_grid.empty()) {
    absl::StrAppend(&out, "eps_grid = ",
                    absl::StrJoin(c.eps_grid, ", ",
                                  [](std::string* s, double v) {
                                    s->append(Num(v));
                                  }),
                    "\n");
  }
  if (!c.mechanisms.empty()) {
    absl::StrAppend(&out, "mechanisms = ",
                    absl::StrJoin(c.mechanisms, ", ",
                                  [](std::string* s, MechanismKind m) {
                                    s->append(MechanismName(m));
                                  }),
                    "\n");
  }
  absl::StrAppend(&out, "reps = ", c.reps, "\n");
  if (c.seed.has_value()) absl::StrAppend(&out, "seed = ", *c.seed, "\n");
  absl::StrAppend(&out, "zero_noise_for_testing = ",
                  c.zero_noise_for_testing ? "true" : "false", "\n");
  absl::StrAppend(&out, "lambda_mode = ", LambdaModeName(c.lambda_mode), "\n");
  if (c.gap_threshold.has_value()) {
    absl::StrAppend(&out, "gap_threshold = ", Num(*c.gap_threshold), "\n");
  }
  if (!c.output_path.empty()) {
    absl::StrAppend(&out, "output_path = ", c.output_path, "\n");
  }
  if (!c.eta_grid.empty()) {
    absl::StrAppend(&out, "eta_grid = ", absl::StrJoin(c.eta_grid, ", "), "\n");
  }
  if (!c.bench_methods.empty()) {
    absl::StrAppend(&out, "bench_methods = ",
                    absl::StrJoin(c.bench_methods, ", ",
                                  [](std::string* s, BenchMethod m) {
                                    s->append(BenchMethodName(m));
                                  }),
                    "\n");
  }
  absl::StrAppend(&out, "exhaustive_budget = ", c.exhaustive_budget, "\n");
  return out;
}

std::vector<MechanismKind> EffectiveMechanisms(const RunConfig& config) {
  if (!config.mechanisms.empty()) return config.mechanisms;
  return {config.problem.mechanism};
}

}  // namespace dpstrata
