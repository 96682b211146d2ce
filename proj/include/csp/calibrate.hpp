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

// Threshold calibration with marginal or PAC coverage guarantees.
//
// Candidate thresholds are visited from most to least conservative. Each one
// is checked by a statistical test on the calibration misses; the search stops
// at the first rejected threshold and returns the one before it.

#ifndef CSP_CALIBRATE_HPP_
#define CSP_CALIBRATE_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "csp/dag.hpp"
#include "csp/setopt.hpp"

namespace csp {

// Strictly descending thresholds in [0, 1].
class ThresholdGrid {
 public:
  // Throws kEmptyGrid or kInvalidGrid.
  static ThresholdGrid Create(std::vector<double> values);
  // 0.999, 0.995, then 0.99 down to 0.50 in steps of 0.01.
  static ThresholdGrid Default();

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

enum class Guarantee { kMarginal, kPac };

struct GuaranteeSpec {
  Guarantee kind = Guarantee::kMarginal;
  double epsilon = 0.1;
  std::optional<double> delta;  // present iff kind == kPac

  static GuaranteeSpec Marginal(double epsilon);
  static GuaranteeSpec Pac(double epsilon, double delta);
  // Throws kInvalidArgument.
  void Validate() const;
};

// Calibrated threshold, or the full-label-set fallback used when even the
// most conservative threshold is rejected.
class TauHat {
 public:
  static TauHat FullSet() { return TauHat(); }
  static TauHat At(double tau) { return TauHat(tau); }

  bool is_full_set() const { return !value_.has_value(); }
  // Requires !is_full_set().
  double value() const { return *value_; }

  friend bool operator==(const TauHat&, const TauHat&) = default;

 private:
  TauHat() = default;
  explicit TauHat(double tau) : value_(tau) {}
  std::optional<double> value_;
};

struct ThresholdAudit {
  double tau = 0.0;
  std::size_t misses = 0;
  bool pass = false;

  friend bool operator==(const ThresholdAudit&, const ThresholdAudit&) = default;
};

struct CalibrationOutcome {
  TauHat tau_hat = TauHat::FullSet();
  std::optional<std::size_t> index_hat;  // 1-based grid index; empty for the fallback
  std::vector<ThresholdAudit> per_threshold;  // only thresholds actually tested
  std::size_t n = 0;

  bool sentinel() const { return tau_hat.is_full_set(); }
};

struct CalibrationRecord {
  std::shared_ptr<const Dag> dag;
  ScoreVector scores;
  std::optional<NodeId> true_leaf;
};

struct CalibrationOptions {
  // When a record admits no feasible set at some tau its prediction falls
  // back to the full label set; set this to count such records as misses.
  bool infeasible_is_miss = false;
  TieBreak tie_break = TieBreak::kMinMass;
  std::size_t jobs = 1;
  const SetSolver* solver = nullptr;  // DefaultSolver() when null
};

// Number of records whose true leaf is outside the optimal set at tau.
// Throws kMissingTrueLeaf for unlabeled records.
std::size_t MissCount(std::span<const CalibrationRecord> records, double tau,
                      std::size_t m, const CalibrationOptions& options = {});

// miss <= (n + 1) * epsilon, evaluated exactly when epsilon has at most nine
// decimal digits.
bool TestMarginal(std::size_t miss, std::size_t n, double epsilon);

// Binomial(n, p) CDF at l. Throws kDomainError when l > n or p outside [0,1].
double BinomialCdf(std::size_t l, std::size_t n, double p);

// Largest l in [0, n] with BinomialCdf(l, n, epsilon) < delta; nullopt when
// l = 0 already fails.
std::optional<std::size_t> ComputeLHat(std::size_t n, double epsilon, double delta);

bool TestPac(std::size_t miss, std::size_t n, double epsilon, double delta);

// Evaluates one grid threshold (0-based index) and reports its audit line.
using ThresholdTest = std::function<ThresholdAudit(std::size_t index, double tau)>;

// Sequential search driven by an arbitrary per-threshold test. The test is
// called for indices 0, 1, ... and never again after its first rejection.
CalibrationOutcome EstimateTau(const ThresholdGrid& grid, std::size_t n,
                               const ThresholdTest& test);

// Builds the guarantee's test for a fixed calibration size and miss counter.
ThresholdTest MakeThresholdTest(const GuaranteeSpec& spec, std::size_t n,
                                std::function<std::size_t(std::size_t, double)> misses);

// Throws kEmptyCalibrationSet on empty records.
CalibrationOutcome EstimateTau(std::span<const CalibrationRecord> records,
                               const ThresholdGrid& grid, const GuaranteeSpec& spec,
                               std::size_t m, const CalibrationOptions& options = {});

}  // namespace csp

#endif  // CSP_CALIBRATE_HPP_
