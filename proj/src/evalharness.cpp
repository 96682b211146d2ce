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

#include "csp/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <fmt/format.h>

#include "csp/error.hpp"
#include "csp/io.hpp"
#include "csp/parallel.hpp"

namespace csp {

EvalReport Evaluate(std::span<const CalibrationRecord> test, const TauHat& tau_hat,
                    std::size_t m, const CalibrationOptions& options) {
  const SetSolver& solver = options.solver ? *options.solver : DefaultSolver();
  EvalReport report;
  report.per_example.resize(test.size());
  ParallelFor(test.size(), options.jobs, [&](std::size_t i) {
    const CalibrationRecord& rec = test[i];
    if (!rec.true_leaf)
      Fail(ErrorCode::kMissingTrueLeaf, fmt::format("test record {} has no true leaf", i));
    if (!rec.dag) Fail(ErrorCode::kInvalidArgument, fmt::format("test record {} has no DAG", i));
    if (!rec.dag->leaf_index(*rec.true_leaf))
      Fail(ErrorCode::kInvalidId,
           fmt::format("test record {}: true label {} is not a leaf", i, *rec.true_leaf));
    ExampleOutcome& out = report.per_example[i];
    if (tau_hat.is_full_set()) {
      out = {false, rec.dag->leaf_count()};
      return;
    }
    const auto result =
        solver.TrySolve({*rec.dag, rec.scores, tau_hat.value(), m, options.tie_break});
    if (!result) {
      out = options.infeasible_is_miss ? ExampleOutcome{true, 0}
                                       : ExampleOutcome{false, rec.dag->leaf_count()};
      return;
    }
    const auto& leaves = result->set.covered_leaves;
    out = {!std::binary_search(leaves.begin(), leaves.end(), *rec.true_leaf), result->set.size};
  });

  std::size_t misses = 0, total_size = 0;
  for (const ExampleOutcome& e : report.per_example) {
    misses += e.miss;
    total_size += e.size;
  }
  const double n = static_cast<double>(test.size());
  report.coverage_rate = test.empty() ? 0.0 : 1.0 - static_cast<double>(misses) / n;
  report.avg_set_size = test.empty() ? 0.0 : static_cast<double>(total_size) / n;
  report.config.m = m;
  report.config.tau_hat = tau_hat;
  report.config.n_test = test.size();
  return report;
}

CoverageTable::CoverageTable(const ScoreGenerator& gen, const ThresholdGrid& grid,
                             std::size_t m, const CalibrationOptions& options)
    : grid_(grid), m_(m), atoms_(gen.atom_count()) {
  if (!gen.enumerable()) Fail(ErrorCode::kNotEnumerable, "generator has no finite atom set");
  const SetSolver& solver = options.solver ? *options.solver : DefaultSolver();
  const Dag& dag = *gen.dag();
  const std::size_t k = grid.size();
  cells_.resize(k * atoms_);
  ParallelFor(atoms_, options.jobs, [&](std::size_t a) {
    for (std::size_t i = 0; i < k; ++i) {
      Cell& cell = cells_[i * atoms_ + a];
      const auto result =
          solver.TrySolve({dag, gen.atom_scores(a), grid[i], m, options.tie_break});
      if (result) {
        cell.kind = Cell::Kind::kSolved;
        cell.cover = LeafSet(dag.leaf_count());
        for (NodeId leaf : result->set.covered_leaves) cell.cover.set(*dag.leaf_index(leaf));
      } else {
        cell.kind = options.infeasible_is_miss ? Cell::Kind::kEmpty : Cell::Kind::kFullSet;
      }
    }
  });

  coverage_.assign(k, 0.0);
  size_.assign(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t a = 0; a < atoms_; ++a) {
      const Cell& cell = cells_[i * atoms_ + a];
      const auto truth = gen.atom_truth(a);
      double covered = 0.0;
      std::size_t size = 0;
      switch (cell.kind) {
        case Cell::Kind::kSolved:
          cell.cover.for_each([&](std::size_t pos) { covered += truth[pos]; });
          size = cell.cover.count();
          break;
        case Cell::Kind::kFullSet:
          for (double p : truth) covered += p;
          size = dag.leaf_count();
          break;
        case Cell::Kind::kEmpty:
          break;
      }
      coverage_[i] += gen.atom_weight(a) * covered;
      size_[i] += gen.atom_weight(a) * static_cast<double>(size);
    }
  }
}

bool CoverageTable::Covers(std::size_t grid_index, std::size_t atom,
                           std::size_t true_position) const {
  const Cell& cell = cells_[grid_index * atoms_ + atom];
  switch (cell.kind) {
    case Cell::Kind::kSolved: return cell.cover.test(true_position);
    case Cell::Kind::kFullSet: return true;
    case Cell::Kind::kEmpty: return false;
  }
  return false;
}

double ExactCoverage(const ScoreGenerator& gen, double tau, std::size_t m,
                     const CalibrationOptions& options) {
  return CoverageTable(gen, ThresholdGrid::Create({tau}), m, options).coverage(0);
}

double ExactCoverage(const Dag& dag, const GeneratorSpec& spec, double tau, std::size_t m,
                     const CalibrationOptions& options) {
  const ScoreGenerator gen(std::make_shared<const Dag>(dag), spec);
  return ExactCoverage(gen, tau, m, options);
}

namespace {

void Summarize(TrialSummary& summary, double epsilon) {
  const std::size_t n = summary.reports.size();
  if (n == 0) return;
  double cov = 0.0, size = 0.0;
  std::size_t violations = 0;
  for (const EvalReport& r : summary.reports) {
    cov += r.coverage_rate;
    size += r.avg_set_size;
    violations += r.coverage_rate < 1.0 - epsilon;
  }
  summary.mean_coverage = cov / static_cast<double>(n);
  summary.mean_size = size / static_cast<double>(n);
  summary.violation_fraction = static_cast<double>(violations) / static_cast<double>(n);
  if (n > 1) {
    double vc = 0.0, vs = 0.0;
    for (const EvalReport& r : summary.reports) {
      vc += (r.coverage_rate - summary.mean_coverage) * (r.coverage_rate - summary.mean_coverage);
      vs += (r.avg_set_size - summary.mean_size) * (r.avg_set_size - summary.mean_size);
    }
    summary.std_coverage = std::sqrt(vc / static_cast<double>(n - 1));
    summary.std_size = std::sqrt(vs / static_cast<double>(n - 1));
  }
}

}  // namespace

TrialSummary RunTrials(const CoverageTable& table, const ScoreGenerator& gen,
                       const GuaranteeSpec& spec, std::size_t n_cal, std::size_t n_trials,
                       std::uint64_t seed, std::size_t jobs) {
  spec.Validate();
  if (n_cal == 0) Fail(ErrorCode::kEmptyCalibrationSet, "n_cal must be positive");
  const ThresholdGrid& grid = table.grid();
  const double full_size = static_cast<double>(gen.dag()->leaf_count());
  TrialSummary summary;
  summary.reports.resize(n_trials);
  ParallelFor(n_trials, jobs, [&](std::size_t t) {
    const std::uint64_t trial_seed = DeriveSeed(seed, t);
    Rng rng(DeriveSeed(trial_seed, 0));
    std::vector<ScoreGenerator::AtomDraw> draws(n_cal);
    for (auto& d : draws) d = gen.DrawAtom(rng);
    auto test = MakeThresholdTest(spec, n_cal, [&](std::size_t i, double) {
      std::size_t misses = 0;
      for (const auto& d : draws) misses += !table.Covers(i, d.atom, d.true_position);
      return misses;
    });
    const CalibrationOutcome outcome = EstimateTau(grid, n_cal, test);

    EvalReport& report = summary.reports[t];
    if (outcome.sentinel()) {
      report.coverage_rate = 1.0;
      report.avg_set_size = full_size;
    } else {
      report.coverage_rate = table.coverage(*outcome.index_hat - 1);
      report.avg_set_size = table.expected_size(*outcome.index_hat - 1);
    }
    report.config = {spec.epsilon, spec.delta, table.m(), spec.kind, outcome.tau_hat,
                     n_cal,        0,          trial_seed};
  });
  Summarize(summary, spec.epsilon);
  return summary;
}

TrialSummary RunTrials(const Dag& dag, const GeneratorSpec& gen_spec, const GuaranteeSpec& spec,
                       std::size_t m, std::size_t n_cal, std::size_t n_trials,
                       std::uint64_t seed, const TrialOptions& options) {
  const ScoreGenerator gen(std::make_shared<const Dag>(dag), gen_spec);
  const CoverageTable table(gen, options.grid, m, options.calibration);
  return RunTrials(table, gen, spec, n_cal, n_trials, seed, options.calibration.jobs);
}

std::vector<EvalReport> RunSweep(const ScoreGenerator& gen, const SweepSpec& sweep,
                                 const CalibrationOptions& options) {
  if (sweep.epsilons.empty() || sweep.ms.empty() ||
      (sweep.guarantee == Guarantee::kPac && sweep.deltas.empty()))
    Fail(ErrorCode::kInvalidArgument, "sweep lists must be non-empty");
  std::vector<EvalReport> rows;
  for (std::size_t m : sweep.ms) {
    if (m < 1) Fail(ErrorCode::kInvalidArgument, "m must be at least 1");
    if (sweep.n_trials == 0) continue;
    const CoverageTable table(gen, sweep.grid, m, options);
    for (double eps : sweep.epsilons) {
      std::vector<GuaranteeSpec> specs;
      if (sweep.guarantee == Guarantee::kMarginal)
        specs.push_back(GuaranteeSpec::Marginal(eps));
      else
        for (double delta : sweep.deltas) specs.push_back(GuaranteeSpec::Pac(eps, delta));
      for (const GuaranteeSpec& spec : specs) {
        TrialSummary s =
            RunTrials(table, gen, spec, sweep.n_cal, sweep.n_trials, sweep.seed, options.jobs);
        for (EvalReport& r : s.reports) rows.push_back(std::move(r));
      }
    }
  }
  return rows;
}

ReportFormat ParseReportFormat(const std::string& name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  Fail(ErrorCode::kUnknownFormat, fmt::format("unknown report format \"{}\"", name));
}

namespace {

std::string GuaranteeName(Guarantee g) { return g == Guarantee::kPac ? "pac" : "marginal"; }

}  // namespace

std::string EmitReport(std::span<const EvalReport> reports, ReportFormat format) {
  std::string out;
  if (format == ReportFormat::kCsv) {
    out = "epsilon,delta,m,guarantee,tau_hat,coverage_rate,avg_set_size,seed\n";
    for (const EvalReport& r : reports) {
      const ReportConfig& c = r.config;
      out += fmt::format("{},{},{},{},{},{},{},{}\n", FormatDouble(c.epsilon),
                         c.delta ? FormatDouble(*c.delta) : std::string(), c.m,
                         GuaranteeName(c.guarantee),
                         c.tau_hat.is_full_set() ? std::string("FULL_SET")
                                                 : FormatDouble(c.tau_hat.value()),
                         FormatDouble(r.coverage_rate), FormatDouble(r.avg_set_size), c.seed);
    }
    return out;
  }
  out = "[";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const EvalReport& r = reports[i];
    const ReportConfig& c = r.config;
    out += i ? ",\n " : "\n ";
    out += fmt::format(
        "{{\"epsilon\": {}, \"delta\": {}, \"m\": {}, \"guarantee\": \"{}\", \"tau_hat\": {}, "
        "\"coverage_rate\": {}, \"avg_set_size\": {}, \"seed\": {}}}",
        FormatDouble(c.epsilon), c.delta ? FormatDouble(*c.delta) : std::string("null"), c.m,
        GuaranteeName(c.guarantee),
        c.tau_hat.is_full_set() ? std::string("\"FULL_SET\"") : FormatDouble(c.tau_hat.value()),
        FormatDouble(r.coverage_rate), FormatDouble(r.avg_set_size), c.seed);
  }
  out += reports.empty() ? "]\n" : "\n]\n";
  return out;
}

}  // namespace csp
