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

// DAG families and synthetic score populations.

#ifndef CSP_DOMAINS_HPP_
#define CSP_DOMAINS_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csp/calibrate.hpp"
#include "csp/dag.hpp"
#include "csp/random.hpp"

namespace csp {

// Prefix tree over k-digit numbers: node [d1..di, ∅..∅] has children
// [d1..di, d, ∅..] for every digit d.
struct DigitTreeSpec {
  std::size_t k = 2;
  std::size_t alphabet_size = 10;
};

// Node ids run layer by layer, prefixes in lexicographic order within a layer,
// so leaf position i is the number i written in base alphabet_size.
// Throws kTooLarge above 10^6 leaves.
Dag BuildDigitTree(const DigitTreeSpec& spec);

// All intervals [a, b] with lo <= a <= b <= hi; [a, b] points to [a+1, b] and
// [a, b-1]. Ids run by decreasing width, then increasing start. Throws
// kTooLarge when hi - lo > 500.
struct IntervalDagSpec {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};
Dag BuildIntervalDag(const IntervalDagSpec& spec);

// Leaf [d1..dk] gets prod_i per_position[i][d_i]. Each categorical must sum
// to 1 within 1e-9 (kInvalidDistribution otherwise).
ScoreVector ProductDigitScores(const Dag& digit_tree,
                               std::span<const std::vector<double>> per_position);

// Loads a DAG from DAG JSON or from "parent<TAB>child" lines (names become
// labels; '#' starts a comment). Throws kParseError, kCycleDetected,
// kDuplicateEdge, kIoError.
Dag LoadHierarchy(const std::string& path);
Dag ParseEdgeList(const std::string& text);

// Synthetic score population.
//
//   dirichlet      peak leaf uniform, Dirichlet(noise/L + concentration*[peak])
//                  params: concentration, noise, atoms, corruption
//   softmax        softmax(N(0, scale^2) logits / temperature)
//                  params: scale, temperature, atoms, corruption
//   product-digit  per position a Dirichlet-concentrated categorical; leaf
//                  probability is the product. params: alphabet, concentration,
//                  noise, atoms, corruption
//   explicit       the given atoms with optional weights; param: corruption
//
// With atoms > 0 the population is a uniform mixture of that many score
// vectors drawn once from `seed`; atoms = 0 draws fresh scores per example
// and cannot be enumerated. True labels follow (1 - corruption) * scores +
// corruption * uniform, so corruption = 0 is the calibrated mode.
struct GeneratorSpec {
  std::string family = "dirichlet";
  std::map<std::string, double> params;
  std::vector<std::vector<double>> atoms;  // explicit family
  std::vector<double> weights;             // explicit family, optional
  std::uint64_t seed = 0;
};

class ScoreGenerator {
 public:
  // Throws kUnknownGenerator or kInvalidArgument.
  ScoreGenerator(std::shared_ptr<const Dag> dag, const GeneratorSpec& spec);

  const std::shared_ptr<const Dag>& dag() const { return dag_; }
  bool enumerable() const { return !atoms_.empty(); }
  std::size_t atom_count() const { return atoms_.size(); }
  const ScoreVector& atom_scores(std::size_t a) const { return atoms_[a]; }
  // Law of the true label given the atom, by leaf position.
  std::span<const double> atom_truth(std::size_t a) const { return truth_[a]; }
  double atom_weight(std::size_t a) const { return weights_[a]; }

  struct AtomDraw {
    std::size_t atom;
    std::size_t true_position;
  };
  // Requires enumerable().
  AtomDraw DrawAtom(Rng& rng) const;
  CalibrationRecord Draw(Rng& rng) const;

 private:
  std::vector<double> DrawScores(Rng& rng) const;
  std::vector<double> Truth(std::span<const double> probs) const;

  std::shared_ptr<const Dag> dag_;
  std::string family_;
  std::map<std::string, double> params_;
  double corruption_ = 0.0;
  std::vector<ScoreVector> atoms_;
  std::vector<std::vector<double>> truth_;
  std::vector<double> weights_;
  double weight_total_ = 0.0;
};

// n i.i.d. labeled records; identical (spec, n, seed) give identical output.
std::vector<CalibrationRecord> SampleSyntheticRecords(std::shared_ptr<const Dag> dag,
                                                      const GeneratorSpec& spec,
                                                      std::size_t n, std::uint64_t seed);

}  // namespace csp

#endif  // CSP_DOMAINS_HPP_
