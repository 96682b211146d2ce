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

// Acceptance suite: one PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <fmt/format.h>

#include "csp/calibrate.hpp"
#include "csp/domains.hpp"
#include "csp/error.hpp"
#include "csp/evalharness.hpp"
#include "csp/io.hpp"
#include "csp/setopt.hpp"
#include "support.hpp"

namespace csp {
namespace {

namespace fs = std::filesystem;
using boost::multiprecision::cpp_rational;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass;
  std::string detail;
};

double Since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Shared population for criteria 3-5: default dirichlet family on the
// 2-digit tree.
struct DigitDomain {
  std::shared_ptr<const Dag> dag = std::make_shared<const Dag>(BuildDigitTree({2, 10}));
  ScoreGenerator gen{dag, GeneratorSpec{}};
};

const DigitDomain& Domain() {
  static const DigitDomain domain;
  return domain;
}

Verdict OracleEquivalence() {
  const auto t0 = Clock::now();
  Rng rng(1001);
  std::size_t mismatches = 0, infeasible = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + UniformIndex(rng, 12);
    const Dag dag = testing::RandomDag(rng, n, trial % 4 == 0);
    const ScoreVector s = testing::RandomScores(rng, dag, trial % 3 == 0);
    const double tau = Uniform01(rng);
    const std::size_t m = 1 + UniformIndex(rng, 4);
    const SolveRequest req{dag, s, tau, m};
    const auto a = BranchAndBoundSolver().TrySolve(req);
    const auto b = BruteForceSolver().TrySolve(req);
    infeasible += !b;
    if (a.has_value() != b.has_value() ||
        (a && (a->objective != b->objective || a->set.node_ids != b->set.node_ids)))
      ++mismatches;
  }
  const double secs = Since(t0);
  return {mismatches == 0 && secs <= 60.0,
          fmt::format("500 DAGs, {} mismatches, {} infeasible, {:.2f}s", mismatches, infeasible,
                      secs)};
}

cpp_rational ExactCdf(std::size_t l, std::size_t n, double p) {
  const cpp_rational q(p);
  if (q == 1) return l == n ? 1 : 0;
  const cpp_rational odds = q / (1 - q);
  cpp_rational term = 1;
  for (std::size_t i = 0; i < n; ++i) term *= (1 - q);
  cpp_rational total = term;
  for (std::size_t j = 1; j <= l; ++j) {
    term *= odds * (n - j + 1) / j;
    total += term;
  }
  return total;
}

Verdict BinomialMachinery() {
  double worst = 0.0;
  for (double p : {0.05, 0.1, 0.2, 0.5})
    for (std::size_t n = 0; n <= 30; ++n)
      for (std::size_t l = 0; l <= n; ++l)
        worst = std::max(worst,
                         std::abs(BinomialCdf(l, n, p) - static_cast<double>(ExactCdf(l, n, p))));
  const bool examples = ComputeLHat(10, 0.5, 0.01) == std::optional<std::size_t>(0) &&
                        ComputeLHat(1, 0.5, 0.1) == std::nullopt;
  std::size_t violations = 0;
  auto ordered = [](std::optional<std::size_t> lo, std::optional<std::size_t> hi) {
    return !lo || (hi && *hi >= *lo);
  };
  for (double eps : {0.05, 0.1, 0.2}) {
    for (double delta : {0.1, 0.01, 0.001})
      for (std::size_t n = 1; n < 100; ++n)
        violations += !ordered(ComputeLHat(n, eps, delta), ComputeLHat(n + 1, eps, delta));
    for (std::size_t n : {20, 100, 200})
      for (int i = 1; i < 100; ++i)
        violations += !ordered(ComputeLHat(n, eps, i / 101.0), ComputeLHat(n, eps, (i + 1) / 101.0));
  }
  return {worst <= 1e-12 && examples && violations == 0,
          fmt::format("max |err| {:.3g}, examples {}, monotonicity violations {}", worst,
                      examples ? "ok" : "wrong", violations)};
}

Verdict PacGuarantee() {
  const auto t0 = Clock::now();
  const auto& d = Domain();
  const CoverageTable table(d.gen, ThresholdGrid::Default(), 4);
  const auto s = RunTrials(table, d.gen, GuaranteeSpec::Pac(0.1, 0.01), 200, 500, 2024);
  const double limit = 0.01 + 3.0 * std::sqrt(0.01 / 500.0);
  const double secs = Since(t0);
  return {s.violation_fraction <= limit && secs <= 600.0,
          fmt::format("violation fraction {:.4f} <= {:.4f}, mean coverage {:.4f}, {:.1f}s",
                      s.violation_fraction, limit, s.mean_coverage, secs)};
}

Verdict MarginalGuarantee() {
  const auto t0 = Clock::now();
  const auto& d = Domain();
  const CoverageTable table(d.gen, ThresholdGrid::Default(), 4);
  bool ok = true;
  std::string detail;
  for (double eps : {0.05, 0.1, 0.2}) {
    const auto s = RunTrials(table, d.gen, GuaranteeSpec::Marginal(eps), 200, 500, 2025);
    ok = ok && s.mean_coverage >= 1.0 - eps - 0.02;
    detail += fmt::format("eps {}: {:.4f} >= {:.2f}; ", eps, s.mean_coverage, 1.0 - eps - 0.02);
  }
  const double secs = Since(t0);
  return {ok && secs <= 600.0, detail + fmt::format("{:.1f}s", secs)};
}

std::size_t Inversions(const std::vector<double>& series) {
  std::size_t count = 0;
  for (std::size_t i = 1; i < series.size(); ++i) count += series[i] > series[i - 1];
  return count;
}

Verdict TrendReproduction() {
  const auto& d = Domain();
  SweepSpec sweep;
  sweep.seed = 2026;
  const auto rows = RunSweep(d.gen, sweep);
  const std::size_t ne = sweep.epsilons.size(), nm = sweep.ms.size();
  std::vector<std::vector<double>> size(nm, std::vector<double>(ne, 0.0));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t cell = i / sweep.n_trials;
    size[cell / ne][cell % ne] += rows[i].avg_set_size / static_cast<double>(sweep.n_trials);
  }
  bool ok = true;
  std::string detail;
  for (std::size_t mi = 0; mi < nm; ++mi) {
    ok = ok && Inversions(size[mi]) <= 1;
    detail += fmt::format("m={}: [{:.2f}] ", sweep.ms[mi], fmt::join(size[mi], " "));
  }
  for (std::size_t ei = 0; ei < ne; ++ei) {
    std::vector<double> by_m;
    for (std::size_t mi = 0; mi < nm; ++mi) by_m.push_back(size[mi][ei]);
    ok = ok && Inversions(by_m) <= 1;
  }
  return {ok, detail};
}

Verdict StructureCounts() {
  const Dag d2 = BuildDigitTree({2, 10});
  const Dag d3 = BuildDigitTree({3, 10});
  const Dag go = LoadHierarchy(std::string(CSP_TEST_DATA) + "/goemotions.tsv");
  const bool ok = d2.node_count() == 111 && d2.leaf_count() == 100 && d3.node_count() == 1111 &&
                  d3.leaf_count() == 1000 && go.node_count() == 52 && go.leaf_count() == 27;
  return {ok, fmt::format("k=2 {}/{}, k=3 {}/{}, emotions {}/{}", d2.node_count(),
                          d2.leaf_count(), d3.node_count(), d3.leaf_count(), go.node_count(),
                          go.leaf_count())};
}

int Shell(const std::string& cmd) { return std::system(cmd.c_str()); }

Verdict CliDeterminism() {
  const fs::path dir = fs::temp_directory_path() / "csp_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = CSP_CLI_PATH;
  const auto p = [&](const std::string& name) { return (dir / name).string(); };

  // Fixtures shared by the configurations.
  int setup = 0;
  setup |= Shell(fmt::format("{} build-dag --kind digit-tree --k 2 --out {}", cli, p("d2.json")));
  setup |= Shell(fmt::format("{} build-dag --kind interval --lo 0 --hi 12 --out {}", cli,
                             p("iv.json")));
  setup |= Shell(fmt::format("{} sample --dag {} --generator dirichlet --n 300 --seed 1 --out {}",
                             cli, p("d2.json"), p("cal.jsonl")));
  setup |= Shell(fmt::format("{} sample --dag {} --generator softmax --n 120 --seed 2 --out {}",
                             cli, p("iv.json"), p("iv.jsonl")));
  WriteFile(p("gen.json"), R"({"family": "product-digit", "params": {"atoms": 48}, "seed": 5})");
  WriteFile(p("sweep.json"), R"({"guarantee": "pac", "epsilons": [0.1, 0.2], "ms": [1, 4], "n_trials": 20})");
  if (setup != 0) return {false, "fixture setup failed"};

  const std::string d2 = p("d2.json"), iv = p("iv.json"), cal = p("cal.jsonl"),
                    ivr = p("iv.jsonl");
  const std::vector<std::string> configs{
      fmt::format("build-dag --kind digit-tree --k 3"),
      fmt::format("build-dag --kind interval --lo 1970 --hi 2020"),
      fmt::format("build-dag --kind from-file --input {}/goemotions.tsv", CSP_TEST_DATA),
      fmt::format("sample --dag {} --generator dirichlet --n 50 --seed 11", d2),
      fmt::format("sample --dag {} --generator {} --n 50 --seed 12", d2, p("gen.json")),
      fmt::format("calibrate --dag {} --records {} --epsilon 0.1", d2, cal),
      fmt::format("calibrate --dag {} --records {} --guarantee pac --epsilon 0.1 --delta 0.01", d2, cal),
      fmt::format("calibrate --dag {} --records {} --epsilon 0.05 --m 1", d2, cal),
      fmt::format("calibrate --dag {} --records {} --epsilon 0.2 --m 2 --infeasible-is-miss", iv, ivr),
      fmt::format("calibrate --dag {} --records {} --guarantee pac --epsilon 0.2 --delta 0.1 --m 3", iv, ivr),
      fmt::format("predict --dag {} --records {} --tau 0.9 --m 4", d2, cal),
      fmt::format("predict --dag {} --records {} --tau 0.8 --m 2", iv, ivr),
      fmt::format("evaluate --dag {} --records {} --tau 0.9 --m 4", d2, cal),
      fmt::format("evaluate --dag {} --records {} --tau 0.7 --m 2 --format json", iv, ivr),
      fmt::format("sweep --dag {} --generator dirichlet --n-trials 30 --seed 4", d2),
      fmt::format("sweep --dag {} --generator dirichlet --n-trials 30 --seed 5 --format json", d2),
      fmt::format("sweep --dag {} --generator {} --config {} --seed 6", d2, p("gen.json"), p("sweep.json")),
      fmt::format("sweep --dag {} --generator softmax --epsilon 0.1,0.2 --m 1,2 --n-trials 25 --seed 7", iv),
      fmt::format("sweep --dag {} --generator dirichlet --guarantee pac --epsilon 0.1 --delta 0.1,0.01 --n-trials 40 --seed 8", d2),
      fmt::format("sweep --dag {} --generator dirichlet --n-trials 20 --n-cal 50 --grid 0.95,0.9,0.8 --seed 9", d2),
  };
  std::size_t differing = 0, failed = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::string out[2];
    int jobs[2] = {1, 4};
    for (int k = 0; k < 2; ++k) {
      const std::string file = p(fmt::format("out{}_{}.txt", i, jobs[k]));
      const int rc = Shell(fmt::format("{} {} --jobs {} > {} 2>&1", cli, configs[i], jobs[k], file));
      if (rc != 0) ++failed;
      out[k] = ReadFile(file);
    }
    differing += out[0] != out[1] || out[0].empty();
  }
  fs::remove_all(dir);
  return {differing == 0 && failed == 0,
          fmt::format("{} configurations, {} differing, {} nonzero exits", configs.size(),
                      differing, failed)};
}

// Solver wrapper that records every threshold it is asked about.
class RecordingSolver final : public SetSolver {
 public:
  std::optional<SolveResult> TrySolve(const SolveRequest& req) const override {
    {
      std::lock_guard<std::mutex> lock(mu_);
      taus_.insert(req.tau);
    }
    return DefaultSolver().TrySolve(req);
  }
  std::set<double> taus() const { return taus_; }

 private:
  mutable std::mutex mu_;
  mutable std::set<double> taus_;
};

Verdict EarlyStopping() {
  Rng rng(1008);
  const auto dag = std::make_shared<const Dag>(BuildDigitTree({1, 6}));
  std::size_t violations = 0, stopped_early = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 1 + UniformIndex(rng, 30);
    std::set<double> distinct;
    while (distinct.size() < k) distinct.insert(std::round(Uniform01(rng) * 1e6) / 1e6);
    const ThresholdGrid grid = ThresholdGrid::Create({distinct.rbegin(), distinct.rend()});
    GeneratorSpec gspec;
    gspec.params = {{"concentration", 1 + 5 * Uniform01(rng)}, {"corruption", Uniform01(rng) * 0.3}};
    const std::size_t n = 5 + UniformIndex(rng, 40);
    const auto records = SampleSyntheticRecords(dag, gspec, n, rng());
    const GuaranteeSpec spec = trial % 2 ? GuaranteeSpec::Marginal(0.05 + 0.3 * Uniform01(rng))
                                         : GuaranteeSpec::Pac(0.05 + 0.3 * Uniform01(rng), 0.1);

    // Pure threshold-test instrumentation.
    std::vector<std::size_t> calls;
    bool failed = false;
    const auto counted = MakeThresholdTest(spec, n, [&](std::size_t i, double tau) {
      if (failed) ++violations;
      calls.push_back(i);
      return MissCount(records, tau, 2);
    });
    const auto outcome = EstimateTau(grid, n, [&](std::size_t i, double tau) {
      ThresholdAudit a = counted(i, tau);
      failed = failed || !a.pass;
      return a;
    });
    for (std::size_t i = 0; i < calls.size(); ++i) violations += calls[i] != i;

    // End-to-end instrumentation through the solver seam.
    RecordingSolver solver;
    CalibrationOptions options;
    options.solver = &solver;
    const auto full = EstimateTau(records, grid, spec, 2, options);
    std::set<double> tested;
    for (const auto& a : full.per_threshold) tested.insert(a.tau);
    for (double tau : solver.taus()) violations += !tested.count(tau);
    for (std::size_t i = 0; i + 1 < full.per_threshold.size(); ++i)
      violations += !full.per_threshold[i].pass;
    violations += full.per_threshold != outcome.per_threshold;
    stopped_early += full.per_threshold.size() < k;
  }
  return {violations == 0,
          fmt::format("1000 grids, {} stopped before the last threshold, {} violations",
                      stopped_early, violations)};
}

}  // namespace
}  // namespace csp

int main() {
  using csp::Verdict;
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"1 optimizer oracle equivalence", csp::OracleEquivalence},
      {"2 binomial machinery", csp::BinomialMachinery},
      {"3 PAC guarantee", csp::PacGuarantee},
      {"4 marginal guarantee", csp::MarginalGuarantee},
      {"5 set size trends", csp::TrendReproduction},
      {"6 structure counts", csp::StructureCounts},
      {"7 CLI determinism", csp::CliDeterminism},
      {"8 early stopping", csp::EarlyStopping},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("%s: %s (%s)\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
