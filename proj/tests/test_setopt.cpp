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

#include <algorithm>
#include <chrono>
#include <optional>
#include <set>
#include <utility>

#include <gtest/gtest.h>

#include "csp/domains.hpp"
#include "csp/error.hpp"
#include "csp/setopt.hpp"
#include "support.hpp"

namespace csp {
namespace {

using testing::ExampleScores;
using testing::ExampleTree;

std::vector<NodeId> Ids(std::initializer_list<NodeId> ids) { return ids; }

TEST(Solve, SpecTreeExamples) {
  const Dag dag = ExampleTree();
  const ScoreVector s = ExampleScores(dag);
  const BruteForceSolver brute;
  for (const SetSolver* solver : {&DefaultSolver(), static_cast<const SetSolver*>(&brute)}) {
    auto r = solver->TrySolve({dag, s, 0.5, 1});
    ASSERT_TRUE(r);
    EXPECT_EQ(r->set.node_ids, Ids({3}));
    EXPECT_EQ(r->objective, 1u);
    EXPECT_TRUE(r->optimal);

    r = solver->TrySolve({dag, s, 0.6, 1});
    ASSERT_TRUE(r);
    EXPECT_EQ(r->set.node_ids, Ids({1}));
    EXPECT_EQ(r->set.covered_leaves, Ids({3, 4}));
    EXPECT_DOUBLE_EQ(r->set.mass, 0.7);
    EXPECT_EQ(r->objective, 2u);

    r = solver->TrySolve({dag, s, 0.0, 1});
    ASSERT_TRUE(r);
    EXPECT_TRUE(r->set.node_ids.empty());
    EXPECT_EQ(r->objective, 0u);
  }
}

TEST(Solve, TwoRootForestInfeasible) {
  const Dag dag = BuildDag(4, {{0, 2}, {1, 3}});
  const ScoreVector s = ScoreVector::Create(dag, {0.5, 0.5});
  try {
    Solve({dag, s, 0.9, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
  }
  EXPECT_FALSE(BruteForceSolver().TrySolve({dag, s, 0.9, 1}));
  const auto both = Solve({dag, s, 0.9, 2});
  EXPECT_EQ(both.objective, 2u);
}

TEST(Solve, SingleNode) {
  const Dag dag = BuildDag(1, {});
  const ScoreVector s = ScoreVector::Create(dag, {1.0});
  EXPECT_EQ(SolveBruteForce({dag, s, 1.0, 1}).set.node_ids, Ids({0}));
  EXPECT_EQ(Solve({dag, s, 1.0, 1}).set.node_ids, Ids({0}));
}

TEST(Solve, BruteForceGuard) {
  std::vector<Edge> edges;
  for (NodeId v = 1; v < 21; ++v) edges.push_back({0, v});
  const Dag dag = BuildDag(21, edges);
  const ScoreVector s = ScoreVector::Create(dag, std::vector<double>(20, 0.05));
  try {
    SolveBruteForce({dag, s, 0.5, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooLarge);
  }
}

TEST(Solve, RejectsBadRequests) {
  const Dag dag = ExampleTree();
  const ScoreVector s = ExampleScores(dag);
  EXPECT_THROW(Solve({dag, s, 0.5, 0}), Error);
  EXPECT_THROW(Solve({dag, s, -0.1, 1}), Error);
  EXPECT_THROW(Solve({dag, s, 1.1, 1}), Error);
  const Dag other = BuildDigitTree({1, 3});
  try {
    Solve({other, s, 0.5, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDagMismatch);
  }
}

TEST(Solve, TieBreakModes) {
  // Both leaves reach tau alone; MinMass takes the lighter one, MinNodeIds the lower id.
  const Dag dag = BuildDag(3, {{0, 1}, {0, 2}});
  const ScoreVector s = ScoreVector::Create(dag, {0.6, 0.4});
  EXPECT_EQ(Solve({dag, s, 0.3, 1, TieBreak::kMinMass}).set.node_ids, Ids({2}));
  EXPECT_EQ(Solve({dag, s, 0.3, 1, TieBreak::kMinNodeIds}).set.node_ids, Ids({1}));
  // A single-child internal node ties with its leaf; the lower id wins.
  const Dag tree = ExampleTree();
  const ScoreVector t = ScoreVector::Create(tree, {0.45, 0.1, 0.45});
  EXPECT_EQ(Solve({tree, t, 0.4, 1}).set.node_ids, Ids({2}));
}

TEST(RedundancyReduce, Examples) {
  const Dag dag = ExampleTree();
  EXPECT_EQ(RedundancyReduce(dag, Ids({0, 1})), Ids({0}));
  EXPECT_EQ(RedundancyReduce(dag, Ids({3, 5})), Ids({3, 5}));
  EXPECT_TRUE(RedundancyReduce(dag, Ids({})).empty());
  EXPECT_EQ(RedundancyReduce(dag, Ids({3, 4, 1})), Ids({3, 4}));
  EXPECT_THROW(RedundancyReduce(dag, Ids({9})), Error);
}

// Independent oracle: plain subset enumeration with its own reachability
// and the documented tie-break order.
std::optional<std::vector<NodeId>> Enumerate(const Dag& dag, const ScoreVector& s, double tau,
                                             std::size_t m) {
  const std::size_t n = dag.node_count();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n));
  for (NodeId v = 0; v < n; ++v) {
    std::vector<NodeId> stack{v};
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      if (reach[v][u]) continue;
      reach[v][u] = true;
      for (const Edge& e : dag.edges())
        if (e.parent == u) stack.push_back(e.child);
    }
  }
  struct Best {
    std::size_t sigma;
    double mass;
    std::vector<NodeId> ids;
  };
  std::optional<Best> best;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) > m) continue;
    std::vector<NodeId> ids;
    for (NodeId v = 0; v < n; ++v)
      if (mask >> v & 1) ids.push_back(v);
    std::size_t sigma = 0;
    double mass = 0.0;
    for (std::size_t pos = 0; pos < dag.leaf_count(); ++pos) {
      const NodeId leaf = dag.leaves()[pos];
      bool covered = false;
      for (NodeId v : ids) covered = covered || reach[v][leaf];
      if (!covered) continue;
      ++sigma;
      mass += s[pos];
    }
    if (mass < tau - 1e-12) continue;
    const Best cand{sigma, mass, ids};
    auto better = [](const Best& a, const Best& b) {
      if (a.sigma != b.sigma) return a.sigma < b.sigma;
      if (a.mass != b.mass) return a.mass < b.mass;
      if (a.ids.size() != b.ids.size()) return a.ids.size() < b.ids.size();
      return a.ids < b.ids;
    };
    if (!best || better(cand, *best)) best = cand;
  }
  if (!best) return std::nullopt;
  return best->ids;
}

TEST(SolveProperty, BruteForceMatchesIndependentEnumeration) {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + UniformIndex(rng, 10);
    const Dag dag = testing::RandomDag(rng, n, trial % 3 == 0);
    const ScoreVector s = testing::RandomScores(rng, dag, trial % 2 == 0);
    const double tau = Uniform01(rng);
    const std::size_t m = 1 + UniformIndex(rng, 4);
    const auto expect = Enumerate(dag, s, tau, m);
    const auto got = BruteForceSolver().TrySolve({dag, s, tau, m});
    ASSERT_EQ(got.has_value(), expect.has_value()) << "trial " << trial;
    if (got) ASSERT_EQ(got->set.node_ids, *expect) << "trial " << trial;
  }
}

TEST(SolveProperty, MatchesBruteForce) {
  Rng rng(22);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 1 + UniformIndex(rng, 12);
    const Dag dag = testing::RandomDag(rng, n, trial % 3 == 0);
    const ScoreVector s = testing::RandomScores(rng, dag, trial % 2 == 0);
    const double tau = Uniform01(rng);
    const std::size_t m = 1 + UniformIndex(rng, 4);
    for (TieBreak tb : {TieBreak::kMinMass, TieBreak::kMinNodeIds}) {
      const auto a = BranchAndBoundSolver().TrySolve({dag, s, tau, m, tb});
      const auto b = BruteForceSolver().TrySolve({dag, s, tau, m, tb});
      ASSERT_EQ(a.has_value(), b.has_value()) << "trial " << trial;
      if (!a) continue;
      ASSERT_EQ(a->objective, b->objective) << "trial " << trial;
      ASSERT_EQ(a->set, b->set) << "trial " << trial;
    }
  }
}

// Hasse diagram of random intervals over `points` positions, closed under
// union of intersecting members; singletons are the leaves and the full span
// the root.
Dag RandomIntervalFamily(Rng& rng, std::size_t points) {
  std::set<std::pair<std::size_t, std::size_t>> family;
  for (std::size_t i = 0; i < points; ++i) family.insert({i, i});
  family.insert({0, points - 1});
  const std::size_t extra = UniformIndex(rng, 6);
  for (std::size_t e = 0; e < extra; ++e) {
    const std::size_t a = UniformIndex(rng, points);
    const std::size_t b = a + UniformIndex(rng, points - a);
    family.insert({a, b});
  }
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& [a, b] : family)
      for (const auto& [c, d] : family)
        if (a <= d && c <= b && family.insert({std::min(a, c), std::max(b, d)}).second) {
          grew = true;
          break;
        }
  }
  const std::vector<std::pair<std::size_t, std::size_t>> nodes(family.begin(), family.end());
  auto inside = [](auto x, auto y) { return y.first <= x.first && x.second <= y.second && x != y; };
  std::vector<Edge> edges;
  for (std::size_t p = 0; p < nodes.size(); ++p)
    for (std::size_t c = 0; c < nodes.size(); ++c) {
      if (!inside(nodes[c], nodes[p])) continue;
      bool covered = false;
      for (std::size_t q = 0; q < nodes.size() && !covered; ++q)
        covered = inside(nodes[c], nodes[q]) && inside(nodes[q], nodes[p]);
      if (!covered) edges.push_back({static_cast<NodeId>(p), static_cast<NodeId>(c)});
    }
  return BuildDag(nodes.size(), std::move(edges));
}

TEST(SolveProperty, MatchesBruteForceOnOverlapClosedDags) {
  Rng rng(24);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const Dag dag = trial % 4 == 0
                        ? BuildIntervalDag({0, static_cast<std::int64_t>(UniformIndex(rng, 5))})
                        : RandomIntervalFamily(rng, 2 + UniformIndex(rng, 6));
    if (dag.node_count() > 20) continue;
    ASSERT_TRUE(dag.is_overlap_closed());
    ++checked;
    const ScoreVector s = testing::RandomScores(rng, dag, trial % 2 == 0);
    const double tau = Uniform01(rng);
    const std::size_t m = 1 + UniformIndex(rng, 4);
    for (TieBreak tb : {TieBreak::kMinMass, TieBreak::kMinNodeIds}) {
      const auto a = BranchAndBoundSolver().TrySolve({dag, s, tau, m, tb});
      const auto b = BruteForceSolver().TrySolve({dag, s, tau, m, tb});
      ASSERT_EQ(a.has_value(), b.has_value()) << "trial " << trial;
      if (!a) continue;
      ASSERT_EQ(a->objective, b->objective) << "trial " << trial;
      ASSERT_EQ(a->set, b->set) << "trial " << trial;
    }
  }
  EXPECT_GT(checked, 300);
}

TEST(SolveProperty, Monotonicity) {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + UniformIndex(rng, 12);
    const Dag dag = testing::RandomDag(rng, n, trial % 2 == 0);
    const ScoreVector s = testing::RandomScores(rng, dag, false);
    const std::size_t m = 1 + UniformIndex(rng, 4);
    std::optional<std::size_t> prev;
    bool feasible = true;
    for (int i = 0; i <= 20; ++i) {
      const double tau = i / 20.0;
      const auto r = DefaultSolver().TrySolve({dag, s, tau, m});
      if (!feasible) {
        ASSERT_FALSE(r) << "feasibility must be monotone";
        continue;
      }
      if (!r) {
        feasible = false;
        continue;
      }
      ASSERT_GE(r->set.mass, tau - kMassSlack);
      ASSERT_LE(r->set.node_ids.size(), m);
      if (prev) ASSERT_GE(r->objective, *prev);
      prev = r->objective;
    }
    const double tau = Uniform01(rng);
    std::optional<std::size_t> last;
    for (std::size_t mm = 1; mm <= 5; ++mm) {
      const auto r = DefaultSolver().TrySolve({dag, s, tau, mm});
      if (last) {
        ASSERT_TRUE(r);
        ASSERT_LE(r->objective, *last);
      }
      if (r) last = r->objective;
    }
  }
}

TEST(SolveProperty, Deterministic) {
  const Dag dag = BuildDigitTree({2, 10});
  Rng rng(24);
  std::vector<double> p(100);
  double total = 0.0;
  for (double& x : p) total += x = Uniform01(rng);
  for (double& x : p) x /= total;
  const ScoreVector s = ScoreVector::Create(dag, p);
  const auto a = Solve({dag, s, 0.8, 4});
  const auto b = Solve({dag, s, 0.8, 4});
  EXPECT_EQ(a.set, b.set);
}

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TEST(SolvePerformance, DigitTreeHighTau) {
  const auto dag = std::make_shared<const Dag>(BuildDigitTree({2, 10}));
  GeneratorSpec spec;
  spec.params["atoms"] = 64;
  const ScoreGenerator gen(dag, spec);
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t a = 0; a < gen.atom_count(); ++a)
    for (double tau : {0.999, 0.95, 0.8})
      for (std::size_t m : {1, 2, 4, 8}) Solve({*dag, gen.atom_scores(a), tau, m});
  EXPECT_LT(Seconds(t0), 20.0);
}

TEST(SolvePerformance, IntervalDag) {
  const Dag dag = BuildIntervalDag({0, 30});
  Rng rng(25);
  std::vector<double> p(dag.leaf_count());
  double total = 0.0;
  for (double& x : p) total += x = std::pow(Uniform01(rng), 3.0);
  for (double& x : p) x /= total;
  const ScoreVector s = ScoreVector::Create(dag, p);
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<std::size_t> prev;
  for (std::size_t m : {1, 2, 3, 4}) {
    const auto r = Solve({dag, s, 0.9, m});
    if (prev) EXPECT_LE(r.objective, *prev);
    prev = r.objective;
  }
  EXPECT_LT(Seconds(t0), 20.0);
}

}  // namespace
}  // namespace csp
