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

// Shared fixtures for the test binaries.

#ifndef CSP_TESTS_SUPPORT_HPP_
#define CSP_TESTS_SUPPORT_HPP_

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "csp/dag.hpp"
#include "csp/random.hpp"

namespace csp::testing {

// root 0 -> A 1, B 2; A -> a1 3 (0.5), a2 4 (0.2); B -> b1 5 (0.3).
inline Dag ExampleTree() {
  return BuildDag(6, {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5}},
                  {"root", "A", "B", "a1", "a2", "b1"});
}

inline ScoreVector ExampleScores(const Dag& dag) {
  return ScoreVector::Create(dag, {0.5, 0.2, 0.3});
}

// Random DAG on n nodes whose edges run from lower to higher ids. With
// forest set every node past the first root gets at most one parent.
inline Dag RandomDag(Rng& rng, std::size_t n, bool forest) {
  if (n == 1) return BuildDag(1, {});
  std::vector<Edge> edges;
  const double p = 0.15 + 0.5 * Uniform01(rng);
  for (NodeId v = 1; v < n; ++v) {
    if (forest) {
      if (Uniform01(rng) < 0.85) edges.push_back({static_cast<NodeId>(UniformIndex(rng, v)), v});
      continue;
    }
    for (NodeId u = 0; u < v; ++u)
      if (Uniform01(rng) < p) edges.push_back({u, v});
  }
  if (edges.empty()) edges.push_back({0, static_cast<NodeId>(1 + UniformIndex(rng, n - 1))});
  return BuildDag(n, std::move(edges));
}

// Strictly valid leaf scores. Coarse mode rounds to tenths to force ties
// between competing covers.
inline ScoreVector RandomScores(Rng& rng, const Dag& dag, bool coarse) {
  const std::size_t l = dag.leaf_count();
  std::vector<double> w(l);
  double total = 0.0;
  for (double& x : w) {
    x = Uniform01(rng) < 0.15 ? 0.0 : -std::log(1.0 - Uniform01(rng));
    if (coarse) x = std::round(x * 4.0);
    total += x;
  }
  if (total == 0.0) {
    w[UniformIndex(rng, l)] = 1.0;
    total = 1.0;
  }
  for (double& x : w) x /= total;
  return ScoreVector::Create(dag, std::move(w));
}

}  // namespace csp::testing

#endif  // CSP_TESTS_SUPPORT_HPP_
