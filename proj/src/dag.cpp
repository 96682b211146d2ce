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

#include "csp/dag.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "csp/error.hpp"

namespace csp {

namespace {

std::uint64_t Fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xff;
    h *= 1099511628211ull;
  }
  return h;
}

bool OverlapClosed(const std::vector<LeafSet>& desc) {
  if (desc.size() > Dag::kOverlapCheckLimit) return false;
  struct Hash {
    std::size_t operator()(const LeafSet& s) const { return s.hash(); }
  };
  const std::unordered_set<LeafSet, Hash> blocks(desc.begin(), desc.end());
  for (std::size_t a = 0; a < desc.size(); ++a)
    for (std::size_t b = a + 1; b < desc.size(); ++b)
      if (desc[a].intersects(desc[b]) && !blocks.contains(desc[a] | desc[b])) return false;
  return true;
}

}  // namespace

Dag Dag::Build(std::size_t node_count, std::vector<Edge> edges,
               std::vector<std::string> labels) {
  if (node_count == 0) Fail(ErrorCode::kInvalidArgument, "node count must be positive");
  if (edges.empty() && node_count != 1)
    Fail(ErrorCode::kInvalidArgument,
         fmt::format("{} nodes but no edges", node_count));
  std::vector<NodeId> origin(node_count);
  std::iota(origin.begin(), origin.end(), NodeId{0});
  return Assemble(node_count, std::move(edges), std::move(labels), std::move(origin));
}

Dag Dag::Assemble(std::size_t node_count, std::vector<Edge> edges,
                  std::vector<std::string> labels, std::vector<NodeId> origin) {
  if (node_count > std::size_t{1} << 31)
    Fail(ErrorCode::kTooLarge, fmt::format("{} nodes", node_count));
  if (!labels.empty() && labels.size() != node_count)
    Fail(ErrorCode::kInvalidArgument,
         fmt::format("{} labels for {} nodes", labels.size(), node_count));
  for (const Edge& e : edges) {
    if (e.parent >= node_count || e.child >= node_count)
      Fail(ErrorCode::kInvalidId,
           fmt::format("edge ({},{}) outside [0,{})", e.parent, e.child, node_count));
    if (e.parent == e.child)
      Fail(ErrorCode::kCycleDetected, fmt::format("self-loop on node {}", e.parent));
  }
  std::sort(edges.begin(), edges.end());
  if (auto it = std::adjacent_find(edges.begin(), edges.end()); it != edges.end())
    Fail(ErrorCode::kDuplicateEdge,
         fmt::format("duplicate edge ({},{})", it->parent, it->child));

  auto d = std::make_shared<Data>();
  d->node_count = node_count;
  d->edges = std::move(edges);
  d->labels = std::move(labels);
  d->origin = std::move(origin);

  const std::size_t n = node_count;
  std::vector<std::size_t> out_deg(n, 0), in_deg(n, 0);
  for (const Edge& e : d->edges) {
    ++out_deg[e.parent];
    ++in_deg[e.child];
  }
  d->child_offsets.assign(n + 1, 0);
  d->parent_offsets.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) {
    d->child_offsets[v + 1] = d->child_offsets[v] + out_deg[v];
    d->parent_offsets[v + 1] = d->parent_offsets[v] + in_deg[v];
  }
  d->child_ids.resize(d->edges.size());
  d->parent_ids.resize(d->edges.size());
  {
    std::vector<std::size_t> cpos(d->child_offsets.begin(), d->child_offsets.end() - 1);
    std::vector<std::size_t> ppos(d->parent_offsets.begin(), d->parent_offsets.end() - 1);
    for (const Edge& e : d->edges) {
      d->child_ids[cpos[e.parent]++] = e.child;
      d->parent_ids[ppos[e.child]++] = e.parent;
    }
  }
  // Parents lists come out ordered by parent id because edges are sorted.

  // Kahn's algorithm, smallest ready id first for a canonical order.
  std::vector<std::size_t> pending(in_deg);
  std::vector<NodeId> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (in_deg[v] == 0) ready.push_back(static_cast<NodeId>(v));
  d->roots = ready;
  std::make_heap(ready.begin(), ready.end(), std::greater<>());
  d->topo.reserve(n);
  while (!ready.empty()) {
    std::pop_heap(ready.begin(), ready.end(), std::greater<>());
    const NodeId v = ready.back();
    ready.pop_back();
    d->topo.push_back(v);
    for (std::size_t i = d->child_offsets[v]; i < d->child_offsets[v + 1]; ++i) {
      const NodeId c = d->child_ids[i];
      if (--pending[c] == 0) {
        ready.push_back(c);
        std::push_heap(ready.begin(), ready.end(), std::greater<>());
      }
    }
  }
  if (d->topo.size() != n) {
    for (std::size_t v = 0; v < n; ++v)
      if (pending[v] != 0)
        Fail(ErrorCode::kCycleDetected,
             fmt::format("directed cycle through node {}", v));
  }

  d->leaf_pos.assign(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    if (out_deg[v] == 0) {
      d->leaf_pos[v] = static_cast<std::int64_t>(d->leaves.size());
      d->leaves.push_back(static_cast<NodeId>(v));
    }
    if (in_deg[v] > 1) d->forest = false;
  }

  const std::size_t width = d->leaves.size();
  d->desc.assign(n, LeafSet(width));
  d->desc_count.assign(n, 0);
  std::vector<std::size_t> layers(n, 1);
  for (auto it = d->topo.rbegin(); it != d->topo.rend(); ++it) {
    const NodeId v = *it;
    if (d->leaf_pos[v] >= 0) d->desc[v].set(static_cast<std::size_t>(d->leaf_pos[v]));
    for (std::size_t i = d->child_offsets[v]; i < d->child_offsets[v + 1]; ++i) {
      const NodeId c = d->child_ids[i];
      d->desc[v] |= d->desc[c];
      layers[v] = std::max(layers[v], layers[c] + 1);
    }
    d->desc_count[v] = d->desc[v].count();
  }
  for (NodeId r : d->roots) d->depth = std::max(d->depth, layers[r]);

  if (!d->forest) d->overlap_closed = OverlapClosed(d->desc);

  for (std::size_t v = 0; v < d->labels.size(); ++v)
    d->label_index.emplace(d->labels[v], static_cast<NodeId>(v));

  std::uint64_t h = 14695981039346656037ull;
  h = Fnv1a(h, n);
  for (const Edge& e : d->edges) h = Fnv1a(h, (std::uint64_t{e.parent} << 32) | e.child);
  d->fingerprint = h;

  return Dag(std::move(d));
}

void Dag::CheckId(NodeId v) const {
  if (v >= data_->node_count)
    Fail(ErrorCode::kInvalidId,
         fmt::format("node {} outside [0,{})", v, data_->node_count));
}

std::span<const NodeId> Dag::children(NodeId v) const {
  CheckId(v);
  return {data_->child_ids.data() + data_->child_offsets[v],
          data_->child_offsets[v + 1] - data_->child_offsets[v]};
}

std::span<const NodeId> Dag::parents(NodeId v) const {
  CheckId(v);
  return {data_->parent_ids.data() + data_->parent_offsets[v],
          data_->parent_offsets[v + 1] - data_->parent_offsets[v]};
}

bool Dag::is_leaf(NodeId v) const {
  CheckId(v);
  return data_->leaf_pos[v] >= 0;
}

std::optional<std::size_t> Dag::leaf_index(NodeId v) const {
  CheckId(v);
  if (data_->leaf_pos[v] < 0) return std::nullopt;
  return static_cast<std::size_t>(data_->leaf_pos[v]);
}

const LeafSet& Dag::descendant_leaves(NodeId v) const {
  CheckId(v);
  return data_->desc[v];
}

std::size_t Dag::descendant_leaf_count(NodeId v) const {
  CheckId(v);
  return data_->desc_count[v];
}

std::string Dag::label(NodeId v) const {
  CheckId(v);
  if (data_->labels.empty()) return std::to_string(v);
  return data_->labels[v];
}

std::optional<NodeId> Dag::find_label(const std::string& label) const {
  auto it = data_->label_index.find(label);
  if (it == data_->label_index.end()) return std::nullopt;
  return it->second;
}

NodeId Dag::origin(NodeId v) const {
  CheckId(v);
  return data_->origin[v];
}

Dag ContractNode(const Dag& dag, NodeId v) {
  dag.CheckId(v);
  if (dag.is_leaf(v))
    Fail(ErrorCode::kIsLeaf, fmt::format("node {} is a leaf", v));
  const std::size_t n = dag.node_count();
  auto renumber = [v](NodeId u) { return u > v ? u - 1 : u; };

  std::vector<Edge> edges;
  edges.reserve(dag.edges().size() + dag.parents(v).size() * dag.children(v).size());
  for (const Edge& e : dag.edges())
    if (e.parent != v && e.child != v)
      edges.push_back({renumber(e.parent), renumber(e.child)});
  for (NodeId p : dag.parents(v))
    for (NodeId c : dag.children(v)) edges.push_back({renumber(p), renumber(c)});
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::vector<std::string> labels;
  if (dag.has_labels()) {
    labels = dag.labels();
    labels.erase(labels.begin() + v);
  }
  std::vector<NodeId> origin;
  origin.reserve(n - 1);
  for (NodeId u = 0; u < n; ++u)
    if (u != v) origin.push_back(dag.origin(u));
  return Dag::Assemble(n - 1, std::move(edges), std::move(labels), std::move(origin));
}

ScoreVector ScoreVector::Create(const Dag& dag, std::vector<double> probs,
                                ScoreValidation mode) {
  if (probs.size() != dag.leaf_count())
    Fail(ErrorCode::kInvalidScores,
         fmt::format("{} probabilities for {} leaves", probs.size(), dag.leaf_count()));
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!std::isfinite(probs[i]) || probs[i] < 0.0)
      Fail(ErrorCode::kInvalidScores,
           fmt::format("probability {} at leaf position {}", probs[i], i));
    sum += probs[i];
  }
  constexpr double kTol = 1e-9;
  if (mode == ScoreValidation::kStrict && std::abs(sum - 1.0) > kTol)
    Fail(ErrorCode::kInvalidScores, fmt::format("probabilities sum to {:.17g}", sum));
  if (mode == ScoreValidation::kLenient && sum > 1.0 + kTol)
    Fail(ErrorCode::kInvalidScores, fmt::format("probabilities sum to {:.17g}", sum));
  ScoreVector s;
  s.fingerprint_ = dag.fingerprint();
  s.probs_ = std::move(probs);
  return s;
}

void CheckScores(const Dag& dag, const ScoreVector& scores) {
  if (scores.dag_fingerprint() != dag.fingerprint() ||
      scores.size() != dag.leaf_count())
    Fail(ErrorCode::kDagMismatch, "score vector was built for a different DAG");
}

LeafSet CoverOf(const Dag& dag, std::span<const NodeId> node_ids) {
  LeafSet cover(dag.leaf_count());
  for (NodeId v : node_ids) cover |= dag.descendant_leaves(v);
  return cover;
}

std::vector<NodeId> LeafIds(const Dag& dag, const LeafSet& cover) {
  std::vector<NodeId> out;
  out.reserve(cover.count());
  cover.for_each([&](std::size_t i) { out.push_back(dag.leaves()[i]); });
  return out;
}

std::vector<NodeId> LeavesOf(const Dag& dag, std::span<const NodeId> node_ids) {
  return LeafIds(dag, CoverOf(dag, node_ids));
}

double MassOf(const ScoreVector& scores, const LeafSet& cover) {
  double mass = 0.0;
  cover.for_each([&](std::size_t i) { mass += scores[i]; });
  return mass;
}

double CoverageMass(const Dag& dag, const ScoreVector& scores,
                    std::span<const NodeId> node_ids) {
  CheckScores(dag, scores);
  return MassOf(scores, CoverOf(dag, node_ids));
}

StructuredSet MakeStructuredSet(const Dag& dag, const ScoreVector& scores,
                                std::vector<NodeId> node_ids) {
  CheckScores(dag, scores);
  std::sort(node_ids.begin(), node_ids.end());
  node_ids.erase(std::unique(node_ids.begin(), node_ids.end()), node_ids.end());
  const LeafSet cover = CoverOf(dag, node_ids);
  StructuredSet s;
  s.node_ids = std::move(node_ids);
  s.covered_leaves = LeafIds(dag, cover);
  s.mass = MassOf(scores, cover);
  s.size = s.covered_leaves.size();
  return s;
}

}  // namespace csp
