// Copyright 2026 The csp Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "csp/calibrate.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "csp/error.hpp"
#include "csp/parallel.hpp"

namespace csp {

ThresholdGrid ThresholdGrid::Create(std::vector<double> values) {
  if (values.empty()) Fail(ErrorCode::kEmptyGrid, "threshold grid is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0 && values[i] <= 1.0))
      Fail(ErrorCode::kInvalidGrid, fmt::format("threshold {} outside [0,1]", values[i]));
    if (i > 0 && !(values[i] < values[i - 1]))
      Fail(ErrorCode::kInvalidGrid,
           fmt::format("thresholds must strictly decrease ({} after {})", values[i],
                       values[i - 1]));
  }
  ThresholdGrid grid;
  grid.values_ = std::move(values);
  return grid;
}

ThresholdGrid ThresholdGrid::Default() {
  std::vector<double> values{0.999, 0.995};
  for (int pct = 99; pct >= 50; --pct) values.push_back(pct / 100.0);
  return Create(std::move(values));
}

GuaranteeSpec GuaranteeSpec::Marginal(double epsilon) {
  GuaranteeSpec spec{Guarantee::kMarginal, epsilon, std::nullopt};
  spec.Validate();
  return spec;
}

GuaranteeSpec GuaranteeSpec::Pac(double epsilon, double delta) {
  GuaranteeSpec spec{Guarantee::kPac, epsilon, delta};
  spec.Validate();
  return spec;
}

void GuaranteeSpec::Validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    Fail(ErrorCode::kInvalidArgument, fmt::format("epsilon {} outside (0,1)", epsilon));
  if (kind == Guarantee::kPac) {
    if (!delta) Fail(ErrorCode::kInvalidArgument, "PAC guarantee requires delta");
    if (!(*delta > 0.0 && *delta < 1.0))
      Fail(ErrorCode::kInvalidArgument, fmt::format("delta {} outside (0,1)", *delta));
  } else if (delta) {
    Fail(ErrorCode::kInvalidArgument, "delta only applies to the PAC guarantee");
  }
}

std::size_t MissCount(std::span<const CalibrationRecord> records, double tau,
                      std::size_t m, const CalibrationOptions& options) {
  const SetSolver& solver = options.solver ? *options.solver : DefaultSolver();
  std::vector<char> missed(records.size(), 0);
  ParallelFor(records.size(), options.jobs, [&](std::size_t i) {
    const CalibrationRecord& rec = records[i];
    if (!rec.true_leaf)
      Fail(ErrorCode::kMissingTrueLeaf, fmt::format("record {} has no true leaf", i));
    if (!rec.dag) Fail(ErrorCode::kInvalidArgument, fmt::format("record {} has no DAG", i));
    const auto pos = rec.dag->leaf_index(*rec.true_leaf);
    if (!pos)
      Fail(ErrorCode::kInvalidId,
           fmt::format("record {}: true label {} is not a leaf", i, *rec.true_leaf));
    const auto result =
        solver.TrySolve({*rec.dag, rec.scores, tau, m, options.tie_break});
    if (!result) {
      missed[i] = options.infeasible_is_miss;
      return;
    }
    missed[i] = !std::binary_search(result->set.covered_leaves.begin(),
                                    result->set.covered_leaves.end(), *rec.true_leaf);
  });
  return static_cast<std::size_t>(std::count(missed.begin(), missed.end(), 1));
}

bool TestMarginal(std::size_t miss, std::size_t n, double epsilon) {
  if (miss > n) Fail(ErrorCode::kDomainError, fmt::format("{} misses out of {}", miss, n));
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    Fail(ErrorCode::kDomainError, fmt::format("epsilon {} outside [0,1]", epsilon));
  // Integer comparison miss * 10^d <= (n + 1) * (epsilon * 10^d) whenever
  // epsilon has a short decimal expansion.
  unsigned __int128 scale = 1;
  for (int d = 0; d <= 9; ++d, scale *= 10) {
    const double scaled = epsilon * static_cast<double>(scale);
    const double rounded = std::round(scaled);
    if (std::abs(scaled - rounded) < 1e-6) {
      const auto digits = static_cast<unsigned __int128>(rounded);
      return static_cast<unsigned __int128>(miss) * scale <=
             static_cast<unsigned __int128>(n + 1) * digits;
    }
  }
  return static_cast<double>(miss) <= static_cast<double>(n + 1) * epsilon + 1e-9;
}

namespace {

// log C(n, j) + j log p + (n - j) log(1 - p), for 0 < p < 1.
double LogBinomialTerm(std::size_t j, std::size_t n, double log_p, double log_q) {
  const double nd = static_cast<double>(n);
  const double jd = static_cast<double>(j);
  return std::lgamma(nd + 1.0) - std::lgamma(jd + 1.0) - std::lgamma(nd - jd + 1.0) +
         jd * log_p + (nd - jd) * log_q;
}

void CheckBinomialArgs(std::size_t n, double p) {
  if (!(p >= 0.0 && p <= 1.0))
    Fail(ErrorCode::kDomainError, fmt::format("p = {} outside [0,1] (n = {})", p, n));
}

}  // namespace

double BinomialCdf(std::size_t l, std::size_t n, double p) {
  CheckBinomialArgs(n, p);
  if (l > n) Fail(ErrorCode::kDomainError, fmt::format("l = {} exceeds n = {}", l, n));
  if (l == n || p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  double sum = 0.0;
  for (std::size_t j = 0; j <= l; ++j) sum += std::exp(LogBinomialTerm(j, n, log_p, log_q));
  return std::clamp(sum, 0.0, 1.0);
}

std::optional<std::size_t> ComputeLHat(std::size_t n, double epsilon, double delta) {
  if (n == 0) Fail(ErrorCode::kDomainError, "calibration size must be positive");
  CheckBinomialArgs(n, epsilon);
  // Prefix sums in the same order as BinomialCdf so both agree bit for bit.
  if (epsilon == 0.0) return std::nullopt;
  std::optional<std::size_t> best;
  if (epsilon == 1.0) {
    // F(l) = 0 for l < n and 1 at l = n.
    if (delta > 0.0 && n > 0) best = n - 1;
    return best;
  }
  const double log_p = std::log(epsilon);
  const double log_q = std::log1p(-epsilon);
  double sum = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    sum += std::exp(LogBinomialTerm(l, n, log_p, log_q));
    if (!(std::clamp(sum, 0.0, 1.0) < delta)) break;
    best = l;
  }
  return best;
}

bool TestPac(std::size_t miss, std::size_t n, double epsilon, double delta) {
  if (miss > n) Fail(ErrorCode::kDomainError, fmt::format("{} misses out of {}", miss, n));
  const auto l_hat = ComputeLHat(n, epsilon, delta);
  return l_hat && miss <= *l_hat;
}

CalibrationOutcome EstimateTau(const ThresholdGrid& grid, std::size_t n,
                               const ThresholdTest& test) {
  CalibrationOutcome out;
  out.n = n;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ThresholdAudit audit = test(i, grid[i]);
    const bool pass = audit.pass;
    out.per_threshold.push_back(audit);
    if (!pass) break;
    out.index_hat = i + 1;
    out.tau_hat = TauHat::At(grid[i]);
  }
  return out;
}

ThresholdTest MakeThresholdTest(const GuaranteeSpec& spec, std::size_t n,
                                std::function<std::size_t(std::size_t, double)> misses) {
  spec.Validate();
  if (spec.kind == Guarantee::kMarginal) {
    const double epsilon = spec.epsilon;
    return [=](std::size_t i, double tau) {
      const std::size_t miss = misses(i, tau);
      return ThresholdAudit{tau, miss, TestMarginal(miss, n, epsilon)};
    };
  }
  const auto l_hat = ComputeLHat(n, spec.epsilon, *spec.delta);
  return [=](std::size_t i, double tau) {
    const std::size_t miss = misses(i, tau);
    return ThresholdAudit{tau, miss, l_hat.has_value() && miss <= *l_hat};
  };
}

CalibrationOutcome EstimateTau(std::span<const CalibrationRecord> records,
                               const ThresholdGrid& grid, const GuaranteeSpec& spec,
                               std::size_t m, const CalibrationOptions& options) {
  if (records.empty()) Fail(ErrorCode::kEmptyCalibrationSet, "no calibration records");
  const std::size_t n = records.size();
  auto test = MakeThresholdTest(spec, n, [&](std::size_t, double tau) {
    return MissCount(records, tau, m, options);
  });
  return EstimateTau(grid, n, test);
}

}  // namespace csp
