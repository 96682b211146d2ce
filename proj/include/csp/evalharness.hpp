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

// Coverage/size metrics, exact coverage on enumerable synthetic populations,
// and the repeated calibrate-then-measure experiment protocol.

#ifndef CSP_EVALHARNESS_HPP_
#define CSP_EVALHARNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csp/calibrate.hpp"
#include "csp/domains.hpp"

namespace csp {

struct ReportConfig {
  double epsilon = 0.0;
  std::optional<double> delta;
  std::size_t m = 1;
  Guarantee guarantee = Guarantee::kMarginal;
  TauHat tau_hat = TauHat::FullSet();
  std::size_t n_cal = 0;
  std::size_t n_test = 0;
  std::uint64_t seed = 0;
};

struct ExampleOutcome {
  bool miss = false;
  std::size_t size = 0;
};

// From Evaluate: coverage_rate = 1 - misses / n_test and avg_set_size =
// sum(size) / n_test over per_example. From RunTrials: exact population
// values, per_example empty and n_test = 0.
struct EvalReport {
  double coverage_rate = 0.0;
  double avg_set_size = 0.0;
  std::vector<ExampleOutcome> per_example;
  ReportConfig config;
};

// Predicts every test record at tau_hat. The full-set fallback covers every
// label with size |L|. Fills config.m, config.tau_hat and config.n_test.
EvalReport Evaluate(std::span<const CalibrationRecord> test, const TauHat& tau_hat,
                    std::size_t m, const CalibrationOptions& options = {});

// Per (grid threshold, atom) optimal covers of an enumerable generator, with
// the exact coverage and expected size of every threshold.
class CoverageTable {
 public:
  CoverageTable(const ScoreGenerator& gen, const ThresholdGrid& grid, std::size_t m,
                const CalibrationOptions& options = {});

  std::size_t m() const { return m_; }
  const ThresholdGrid& grid() const { return grid_; }
  bool Covers(std::size_t grid_index, std::size_t atom, std::size_t true_position) const;
  double coverage(std::size_t grid_index) const { return coverage_[grid_index]; }
  double expected_size(std::size_t grid_index) const { return size_[grid_index]; }

 private:
  struct Cell {
    enum class Kind : std::uint8_t { kSolved, kFullSet, kEmpty } kind;
    LeafSet cover;
  };
  ThresholdGrid grid_;
  std::size_t m_;
  std::size_t atoms_;
  std::vector<Cell> cells_;  // grid-major
  std::vector<double> coverage_;
  std::vector<double> size_;
};

// Probability that the true label lands in the optimal set at tau, by
// enumeration of the generator's atoms. Throws kNotEnumerable.
double ExactCoverage(const ScoreGenerator& gen, double tau, std::size_t m,
                     const CalibrationOptions& options = {});
double ExactCoverage(const Dag& dag, const GeneratorSpec& spec, double tau, std::size_t m,
                     const CalibrationOptions& options = {});

struct TrialOptions {
  ThresholdGrid grid = ThresholdGrid::Default();
  CalibrationOptions calibration;
};

struct TrialSummary {
  std::vector<EvalReport> reports;  // one per trial
  double mean_coverage = 0.0;
  double std_coverage = 0.0;
  double mean_size = 0.0;
  double std_size = 0.0;
  // Fraction of trials whose exact coverage falls below 1 - epsilon.
  double violation_fraction = 0.0;
};

// Each trial draws a fresh calibration set of n_cal examples under its own
// seed DeriveSeed(seed, trial), calibrates, and measures the exact coverage
// and expected set size of the calibrated threshold.
TrialSummary RunTrials(const CoverageTable& table, const ScoreGenerator& gen,
                       const GuaranteeSpec& spec, std::size_t n_cal, std::size_t n_trials,
                       std::uint64_t seed, std::size_t jobs = 1);
TrialSummary RunTrials(const Dag& dag, const GeneratorSpec& gen_spec, const GuaranteeSpec& spec,
                       std::size_t m, std::size_t n_cal, std::size_t n_trials,
                       std::uint64_t seed, const TrialOptions& options = {});

struct SweepSpec {
  Guarantee guarantee = Guarantee::kMarginal;
  std::vector<double> epsilons{0.05, 0.1, 0.15, 0.2};
  std::vector<double> deltas{0.1, 0.01, 0.001};  // PAC only
  std::vector<std::size_t> ms{1, 2, 4, 8};
  std::size_t n_trials = 500;
  std::size_t n_cal = 200;
  std::uint64_t seed = 0;
  ThresholdGrid grid = ThresholdGrid::Default();
};

// Rows ordered by m, epsilon, delta, trial. Every configuration reuses the
// same trial seeds.
std::vector<EvalReport> RunSweep(const ScoreGenerator& gen, const SweepSpec& sweep,
                                 const CalibrationOptions& options = {});

enum class ReportFormat { kCsv, kJson };
// Throws kUnknownFormat.
ReportFormat ParseReportFormat(const std::string& name);

// Columns: epsilon, delta, m, guarantee, tau_hat, coverage_rate,
// avg_set_size, seed. Reals use 17 significant digits.
std::string EmitReport(std::span<const EvalReport> reports, ReportFormat format);

}  // namespace csp

#endif  // CSP_EVALHARNESS_HPP_
