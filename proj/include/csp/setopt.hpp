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

// Minimum-size structured prediction sets.
//
// Given leaf probabilities, a mass threshold tau and a node budget m, find
// node set S with |S| <= m and mass(leaves(S)) >= tau that covers as few
// leaves as possible. Among optimal sets the winner is fixed by TieBreak so
// that identical inputs always yield identical node ids.

#ifndef CSP_SETOPT_HPP_
#define CSP_SETOPT_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "csp/dag.hpp"

namespace csp {

// Slack on the mass constraint: mass >= tau - kMassSlack counts as feasible.
inline constexpr double kMassSlack = 1e-12;

enum class TieBreak {
  // smallest covered mass, then fewest nodes, then lexicographic node ids
  kMinMass,
  // fewest nodes, then lexicographic node ids
  kMinNodeIds,
};

struct SolveRequest {
  const Dag& dag;
  const ScoreVector& scores;
  double tau = 0.0;
  std::size_t m = 1;
  TieBreak tie_break = TieBreak::kMinMass;
};

struct SolveResult {
  StructuredSet set;
  std::size_t objective = 0;  // == set.size
  bool optimal = true;
};

// Backend seam: anything that honors the SolveRequest/SolveResult contract
// (e.g. an external MILP solver) can stand in for the built-in search.
class SetSolver {
 public:
  virtual ~SetSolver() = default;
  // nullopt when no set with at most m nodes reaches tau.
  virtual std::optional<SolveResult> TrySolve(const SolveRequest& req) const = 0;
};

// Exact branch and bound over node selections.
class BranchAndBoundSolver final : public SetSolver {
 public:
  std::optional<SolveResult> TrySolve(const SolveRequest& req) const override;
};

// Exhaustive enumeration of every node subset of size <= m. Only for DAGs
// with at most kMaxNodes nodes; used as a test oracle.
class BruteForceSolver final : public SetSolver {
 public:
  static constexpr std::size_t kMaxNodes = 20;
  std::optional<SolveResult> TrySolve(const SolveRequest& req) const override;
};

const SetSolver& DefaultSolver();

// Throws kInfeasible when no set qualifies, kDagMismatch on foreign scores.
SolveResult Solve(const SolveRequest& req);
// Same contract as Solve; throws kTooLarge above BruteForceSolver::kMaxNodes.
SolveResult SolveBruteForce(const SolveRequest& req);

// Drops nodes whose descendant leaves are covered by the remaining nodes,
// visiting candidates in ascending id order. leaves_of is unchanged.
std::vector<NodeId> RedundancyReduce(const Dag& dag, std::span<const NodeId> node_ids);

// True when the first result wins under the tie-break order.
bool Precedes(const SolveResult& a, const SolveResult& b, TieBreak tie_break);

}  // namespace csp

#endif  // CSP_SETOPT_HPP_
