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

// Directed acyclic graph over which structured prediction sets are chosen.
//
// A structured prediction set is a subset of DAG nodes; it stands for the set
// of leaves reachable from (or equal to) one of its nodes. Every Dag caches a
// topological order and, per node, the bitset of descendant leaves, so that
// set coverage and probability mass can be accumulated without graph walks.
// Dag is an immutable value; copies share the cached data.

#ifndef CSP_DAG_HPP_
#define CSP_DAG_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "csp/leaf_set.hpp"

namespace csp {

using NodeId = std::uint32_t;

struct Edge {
  NodeId parent;
  NodeId child;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

class Dag {
 public:
  // Validates and builds a DAG. Edges may be given in any order; a non-empty
  // edge list is required unless node_count == 1. labels is either empty or
  // holds one string per node.
  //
  // Throws Error with kInvalidId, kDuplicateEdge, kCycleDetected or
  // kInvalidArgument.
  static Dag Build(std::size_t node_count, std::vector<Edge> edges,
                   std::vector<std::string> labels = {});

  std::size_t node_count() const { return data_->node_count; }
  // Sorted by (parent, child).
  const std::vector<Edge>& edges() const { return data_->edges; }
  std::span<const NodeId> children(NodeId v) const;
  std::span<const NodeId> parents(NodeId v) const;

  // Leaf ids in ascending order; leaf position i refers to leaves()[i].
  const std::vector<NodeId>& leaves() const { return data_->leaves; }
  std::size_t leaf_count() const { return data_->leaves.size(); }
  bool is_leaf(NodeId v) const;
  // Position of v in leaves(), or nullopt for internal nodes.
  std::optional<std::size_t> leaf_index(NodeId v) const;

  const std::vector<NodeId>& roots() const { return data_->roots; }
  const std::vector<NodeId>& topological_order() const { return data_->topo; }
  // Number of nodes on the longest root-to-leaf path.
  std::size_t depth() const { return data_->depth; }
  // True when every node has at most one parent; descendant-leaf sets of a
  // forest are then pairwise nested or disjoint.
  bool is_forest() const { return data_->forest; }
  // True when the union of any two intersecting descendant-leaf sets is again
  // the descendant-leaf set of some node. Holds for forests and interval
  // lattices; only checked up to kOverlapCheckLimit nodes.
  bool is_overlap_closed() const { return data_->overlap_closed; }
  static constexpr std::size_t kOverlapCheckLimit = 4096;

  const LeafSet& descendant_leaves(NodeId v) const;
  std::size_t descendant_leaf_count(NodeId v) const;

  bool has_labels() const { return !data_->labels.empty(); }
  // Node label, or the decimal id when the DAG carries no labels.
  std::string label(NodeId v) const;
  const std::vector<std::string>& labels() const { return data_->labels; }
  // Lookup by label; nullopt when absent.
  std::optional<NodeId> find_label(const std::string& label) const;

  // Id this node had in the DAG it was derived from by ContractNode; the
  // identity for DAGs produced by Build.
  NodeId origin(NodeId v) const;

  // Structural hash of (node_count, edges). Score vectors remember the
  // fingerprint of the DAG they were validated against.
  std::uint64_t fingerprint() const { return data_->fingerprint; }

  void CheckId(NodeId v) const;

 private:
  struct Data {
    std::size_t node_count = 0;
    std::vector<Edge> edges;
    // CSR adjacency.
    std::vector<std::size_t> child_offsets, parent_offsets;
    std::vector<NodeId> child_ids, parent_ids;
    std::vector<NodeId> leaves;
    std::vector<std::int64_t> leaf_pos;  // -1 for internal nodes
    std::vector<NodeId> roots;
    std::vector<NodeId> topo;
    std::vector<LeafSet> desc;
    std::vector<std::size_t> desc_count;
    std::size_t depth = 0;
    bool forest = true;
    bool overlap_closed = true;
    std::vector<std::string> labels;
    std::unordered_map<std::string, NodeId> label_index;
    std::vector<NodeId> origin;
    std::uint64_t fingerprint = 0;
  };
  friend Dag ContractNode(const Dag&, NodeId);

  static Dag Assemble(std::size_t node_count, std::vector<Edge> edges,
                      std::vector<std::string> labels,
                      std::vector<NodeId> origin);

  explicit Dag(std::shared_ptr<const Data> data) : data_(std::move(data)) {}

  std::shared_ptr<const Data> data_;
};

inline Dag BuildDag(std::size_t node_count, std::vector<Edge> edges,
                    std::vector<std::string> labels = {}) {
  return Dag::Build(node_count, std::move(edges), std::move(labels));
}

// Removes an internal node; each of its parents becomes a parent of each of
// its children. Surviving nodes are renumbered densely in ascending order of
// their old ids and keep their labels; origin() maps back to the old id.
// Throws kIsLeaf for leaves, kInvalidId for out-of-range ids.
Dag ContractNode(const Dag& dag, NodeId v);

enum class ScoreValidation {
  kStrict,   // sum within 1e-9 of 1
  kLenient,  // sum at most 1 + 1e-9
};

// Per-leaf probabilities for one input, stored densely by leaf position.
class ScoreVector {
 public:
  ScoreVector() = default;

  // Throws kInvalidScores on wrong length, negative or non-finite entries, or
  // a sum outside the tolerance of the chosen validation mode.
  static ScoreVector Create(const Dag& dag, std::vector<double> probs,
                            ScoreValidation mode = ScoreValidation::kStrict);

  std::uint64_t dag_fingerprint() const { return fingerprint_; }
  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t leaf_position) const {
    return probs_[leaf_position];
  }

  friend bool operator==(const ScoreVector&, const ScoreVector&) = default;

 private:
  std::uint64_t fingerprint_ = 0;
  std::vector<double> probs_;
};

// Throws kDagMismatch unless scores were validated against this DAG shape.
void CheckScores(const Dag& dag, const ScoreVector& scores);

// Union of descendant-leaf sets of node_ids, as leaf positions.
LeafSet CoverOf(const Dag& dag, std::span<const NodeId> node_ids);
// Same union, as ascending leaf ids.
std::vector<NodeId> LeavesOf(const Dag& dag, std::span<const NodeId> node_ids);
std::vector<NodeId> LeafIds(const Dag& dag, const LeafSet& cover);

// Sum of probabilities over covered leaf positions, accumulated in ascending
// position order. Every mass in the library is computed this way so that
// equal covers always yield bit-identical masses.
double MassOf(const ScoreVector& scores, const LeafSet& cover);
double CoverageMass(const Dag& dag, const ScoreVector& scores,
                    std::span<const NodeId> node_ids);

struct StructuredSet {
  std::vector<NodeId> node_ids;        // ascending
  std::vector<NodeId> covered_leaves;  // ascending leaf ids
  double mass = 0.0;
  std::size_t size = 0;  // |covered_leaves|

  friend bool operator==(const StructuredSet&, const StructuredSet&) = default;
};

StructuredSet MakeStructuredSet(const Dag& dag, const ScoreVector& scores,
                                std::vector<NodeId> node_ids);

}  // namespace csp

#endif  // CSP_DAG_HPP_
