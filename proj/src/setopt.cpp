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

#include "csp/setopt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <unordered_map>

#include <fmt/format.h>

#include "csp/error.hpp"

namespace csp {
namespace {

// Bounds are only trusted when they miss by more than this; keeps pruning
// robust to summation order.
constexpr double kBoundSlack = 1e-9;

struct Key {
  std::size_t sigma = 0;
  double mass = 0.0;
  const std::vector<NodeId>* ids = nullptr;  // ascending
};

bool KeyLess(const Key& a, const Key& b, TieBreak tie_break) {
  if (a.sigma != b.sigma) return a.sigma < b.sigma;
  if (tie_break == TieBreak::kMinMass && a.mass != b.mass) return a.mass < b.mass;
  if (a.ids->size() != b.ids->size()) return a.ids->size() < b.ids->size();
  return std::lexicographical_compare(a.ids->begin(), a.ids->end(), b.ids->begin(),
                                      b.ids->end());
}

void ValidateRequest(const SolveRequest& req) {
  CheckScores(req.dag, req.scores);
  if (req.m < 1) Fail(ErrorCode::kInvalidArgument, "m must be at least 1");
  if (!(req.tau >= 0.0) || req.tau > 1.0 + 1e-9)
    Fail(ErrorCode::kInvalidArgument, fmt::format("tau {} outside [0,1]", req.tau));
}

SolveResult MakeResult(const SolveRequest& req, std::vector<NodeId> ids) {
  SolveResult r;
  r.set = MakeStructuredSet(req.dag, req.scores, std::move(ids));
  r.objective = r.set.size;
  r.optimal = true;
  return r;
}

class BranchAndBound {
 public:
  explicit BranchAndBound(const SolveRequest& req)
      : req_(req),
        dag_(req.dag),
        scores_(req.scores),
        tau_eff_(req.tau - kMassSlack),
        m_(req.m),
        forest_(req.dag.is_forest()),
        disjoint_(req.dag.is_overlap_closed()) {}

  std::optional<SolveResult> Run() {
    if (tau_eff_ <= 0.0) return MakeResult(req_, {});
    const std::size_t width = dag_.leaf_count();
    LeafSet all(width);
    all.set_all();
    if (MassOf(scores_, all) < tau_eff_) return std::nullopt;

    block_mass_.assign(dag_.node_count(), 0.0);
    for (NodeId v = 0; v < dag_.node_count(); ++v) {
      block_mass_[v] = MassOf(scores_, dag_.descendant_leaves(v));
      if (block_mass_[v] > 0.0) cand_.push_back(v);
    }
    // Descending mass per covered leaf; ties by id.
    std::sort(cand_.begin(), cand_.end(), [&](NodeId a, NodeId b) {
      const double lhs = block_mass_[a] * static_cast<double>(dag_.descendant_leaf_count(b));
      const double rhs = block_mass_[b] * static_cast<double>(dag_.descendant_leaf_count(a));
      if (lhs != rhs) return lhs > rhs;
      return a < b;
    });

    leaf_order_.resize(width);
    for (std::size_t i = 0; i < width; ++i) leaf_order_[i] = i;
    std::stable_sort(leaf_order_.begin(), leaf_order_.end(),
                     [&](std::size_t a, std::size_t b) { return scores_[a] > scores_[b]; });

    covered_.assign(m_ + 1, LeafSet(width));
    sigma_.assign(m_ + 1, 0);
    mass_.assign(m_ + 1, 0.0);
    live_.resize(m_ + 1);
    suffix_.resize(m_ + 1);
    scratch_ = LeafSet(width);
    if (!forest_)
      for (NodeId v : cand_) {
        const LeafSet& block = dag_.descendant_leaves(v);
        block_index_.emplace(block.hash(), &block);
      }
    blocks_.reserve(cand_.size());
    for (NodeId v : cand_) blocks_.push_back(&dag_.descendant_leaves(v));

    Incumbent();
    std::vector<Live> roots;
    roots.reserve(cand_.size());
    for (std::size_t j = 0; j < cand_.size(); ++j)
      roots.push_back({j, dag_.descendant_leaf_count(cand_[j]), block_mass_[cand_[j]]});
    if (disjoint_)
      Branch(0, std::move(roots));
    else
      Expand(0, roots, 0);
    if (!found_) return std::nullopt;
    return MakeResult(req_, best_ids_);
  }

 private:
  struct Live {
    std::size_t cand_index;
    std::size_t count;  // leaves not yet covered
    double mass;        // their mass
  };

  std::size_t BestSigma() const {
    return found_ ? best_sigma_ : dag_.leaf_count() + 1;
  }

  void Record(std::size_t sigma, double mass) {
    std::vector<NodeId> ids = selected_;
    std::sort(ids.begin(), ids.end());
    const Key candidate{sigma, mass, &ids};
    const Key incumbent{best_sigma_, best_mass_, &best_ids_};
    if (!found_ || KeyLess(candidate, incumbent, req_.tie_break)) {
      found_ = true;
      best_sigma_ = sigma;
      best_mass_ = mass;
      best_ids_ = std::move(ids);
    }
  }

  // Greedy feasible start: while the budget allows, close the gap with the
  // smallest block that reaches tau, otherwise take the densest block.
  void Incumbent() {
    LeafSet cov(dag_.leaf_count());
    std::size_t sigma = 0;
    for (std::size_t pick = 0; pick < m_; ++pick) {
      std::optional<NodeId> closer, densest;
      std::size_t closer_count = 0;
      double closer_mass = 0.0, best_density = 0.0;
      std::size_t densest_count = 0;
      for (NodeId v : cand_) {
        const LeafSet& block = dag_.descendant_leaves(v);
        const std::size_t count = block.count_minus(cov);
        if (count == 0) continue;
        scratch_ = cov;
        scratch_ |= block;
        const double mass = MassOf(scores_, scratch_);
        if (mass >= tau_eff_) {
          if (!closer || count < closer_count || (count == closer_count && mass < closer_mass)) {
            closer = v;
            closer_count = count;
            closer_mass = mass;
          }
        } else {
          const double density = mass / static_cast<double>(sigma + count);
          if (!densest || density > best_density) {
            densest = v;
            best_density = density;
            densest_count = count;
          }
        }
      }
      if (closer) {
        selected_.push_back(*closer);
        Record(sigma + closer_count, closer_mass);
        break;
      }
      if (!densest) break;
      selected_.push_back(*densest);
      cov |= dag_.descendant_leaves(*densest);
      sigma += densest_count;
    }
    selected_.clear();
  }

  // Overlap-closed DAGs: an optimal selection is pairwise disjoint. Branches
  // on the heaviest leaf the live blocks can still reach: either one of the
  // blocks holding it is selected, or it stays uncovered.
  void Branch(std::size_t depth, std::vector<Live> live) {
    const std::size_t picks_left = m_ - depth;
    const LeafSet& cov = covered_[depth];
    const std::size_t sigma = sigma_[depth];
    const double need = tau_eff_ - mass_[depth];
    const std::size_t budget = BestSigma() - sigma;

    std::erase_if(live, [&](const Live& item) { return item.count > budget; });
    if (live.empty()) return;
    if (!Reachable(live, picks_left, need)) return;
    if (!GreedyWithin(live, cov, need, budget)) return;
    if (!BlockPriceWithin(live, picks_left, need, budget)) return;
    if (!KnapsackWithin(live, picks_left, need, budget)) return;
    const std::size_t pivot = pivot_;

    // Blocks without the pivot; every child draws from these.
    std::vector<Live> rest;
    std::vector<const Live*> holding;
    for (const Live& item : live) {
      if (blocks_[item.cand_index]->test(pivot))
        holding.push_back(&item);
      else
        rest.push_back(item);
    }
    std::vector<const Live*> heavy;
    if (picks_left > 1) {
      heavy.reserve(rest.size());
      for (const Live& item : rest) heavy.push_back(&item);
      std::stable_sort(heavy.begin(), heavy.end(),
                       [](const Live* a, const Live* b) { return a->mass > b->mass; });
    }

    for (const Live* item : holding) {
      const NodeId v = cand_[item->cand_index];
      const LeafSet& block = *blocks_[item->cand_index];
      const std::size_t new_sigma = sigma + item->count;
      if (new_sigma > BestSigma()) continue;
      LeafSet& next = covered_[depth + 1];
      next = cov;
      next |= block;
      const double new_mass = MassOf(scores_, next);
      selected_.push_back(v);
      if (new_mass >= tau_eff_) {
        Record(new_sigma, new_mass);
      } else if (picks_left > 1 && new_sigma < BestSigma() &&
                 DisjointSupply(heavy, block, picks_left - 1) >=
                     tau_eff_ - new_mass - kBoundSlack) {
        std::vector<Live> child;
        for (const Live& other : rest) {
          const LeafSet& other_block = *blocks_[other.cand_index];
          if (other_block.intersects(block)) continue;
          if (!forest_ && Merges(block, other_block)) continue;
          child.push_back(other);
        }
        sigma_[depth + 1] = new_sigma;
        mass_[depth + 1] = new_mass;
        Branch(depth + 1, std::move(child));
      }
      selected_.pop_back();
    }
    Branch(depth, std::move(rest));
  }

  // Total mass of the k heaviest entries of `heavy` (sorted by mass) that
  // miss `block`.
  double DisjointSupply(const std::vector<const Live*>& heavy, const LeafSet& block,
                        std::size_t k) const {
    double supply = 0.0;
    for (const Live* item : heavy) {
      if (k == 0) break;
      if (blocks_[item->cand_index]->intersects(block)) continue;
      supply += item->mass;
      --k;
    }
    return supply;
  }

  // General DAGs: with `depth` nodes selected and their cover still short of
  // tau, tries every extension by the entries of `source` at positions >=
  // from. Blocks dropped by a parent stay dropped below it.
  void Expand(std::size_t depth, const std::vector<Live>& source, std::size_t from) {
    const std::size_t picks_left = m_ - depth;
    const LeafSet& cov = covered_[depth];
    const std::size_t sigma = sigma_[depth];
    const double need = tau_eff_ - mass_[depth];
    const std::size_t budget = BestSigma() - sigma;

    auto& live = live_[depth];
    live.clear();
    for (std::size_t pos = from; pos < source.size(); ++pos) {
      const std::size_t j = source[pos].cand_index;
      const LeafSet& block = *blocks_[j];
      const std::size_t count = block.count_minus(cov);
      if (count == 0 || count > budget) continue;
      if (MergesWithSelected(block)) continue;
      scratch_ = block;
      scratch_.subtract(cov);
      const double mass = MassOf(scores_, scratch_);
      if (mass <= 0.0) continue;
      live.push_back({j, count, mass});
    }
    if (live.empty()) return;

    if (!Reachable(live, picks_left, need)) return;
    if (!GreedyWithin(live, cov, need, budget)) return;
    if (!LagrangeWithin(live, cov, picks_left, need, budget)) return;
    auto& supply = suffix_[depth];
    if (picks_left > 1) SuffixSupply(live, picks_left - 1, supply);

    for (std::size_t i = 0; i < live.size(); ++i) {
      const Live& item = live[i];
      const std::size_t new_sigma = sigma + item.count;
      if (new_sigma > BestSigma()) continue;
      const NodeId v = cand_[item.cand_index];
      const LeafSet& block = *blocks_[item.cand_index];
      if (MakesRedundant(block)) continue;

      LeafSet& next = covered_[depth + 1];
      next = cov;
      next |= block;
      const double new_mass = MassOf(scores_, next);
      selected_.push_back(v);
      if (new_mass >= tau_eff_) {
        Record(new_sigma, new_mass);
      } else if (picks_left > 1 && new_sigma < BestSigma() &&
                 new_mass + supply[i + 1] >= tau_eff_ - kBoundSlack) {
        sigma_[depth + 1] = new_sigma;
        mass_[depth + 1] = new_mass;
        Expand(depth + 1, live, i + 1);
      }
      selected_.pop_back();
    }
  }

  // out[i] is the total of the k largest masses among live[i..].
  void SuffixSupply(const std::vector<Live>& live, std::size_t k, std::vector<double>& out) {
    out.assign(live.size() + 1, 0.0);
    top_.clear();
    double total = 0.0;
    for (std::size_t i = live.size(); i-- > 0;) {
      const double mass = live[i].mass;
      if (top_.size() < k) {
        top_.insert(std::upper_bound(top_.begin(), top_.end(), mass), mass);
        total += mass;
      } else if (mass > top_.front()) {
        total += mass - top_.front();
        top_.erase(top_.begin());
        top_.insert(std::upper_bound(top_.begin(), top_.end(), mass), mass);
      }
      out[i] = total;
    }
  }

  // The k heaviest remaining blocks must be able to supply the missing mass.
  bool Reachable(const std::vector<Live>& live, std::size_t k, double need) {
    top_.clear();
    for (const Live& item : live) top_.push_back(item.mass);
    const std::size_t take = std::min(k, top_.size());
    std::partial_sort(top_.begin(), top_.begin() + take, top_.end(), std::greater<>());
    double supply = 0.0;
    for (std::size_t i = 0; i < take; ++i) supply += top_[i];
    return supply >= need - kBoundSlack;
  }

  // Any completion covers new leaves of total mass >= need; it needs at least
  // as many leaves as the heaviest uncovered leaves reachable from live
  // candidates take to reach that mass. Leaves the heaviest of them in pivot_.
  bool GreedyWithin(const std::vector<Live>& live, const LeafSet& cov, double need,
                    std::size_t budget) {
    scratch_.clear();
    for (const Live& item : live) scratch_ |= *blocks_[item.cand_index];
    scratch_.subtract(cov);
    double acc = 0.0;
    std::size_t taken = 0;
    for (std::size_t pos : leaf_order_) {
      if (!scratch_.test(pos)) continue;
      if (taken == 0) pivot_ = pos;
      if (++taken > budget) return false;
      acc += scores_[pos];
      marginal_ = scores_[pos];
      if (acc >= need - kBoundSlack) return true;
    }
    return false;
  }

  // For a leaf price lam, a completion by at most k blocks covering new mass
  // >= need with s new leaves has need - lam*s <= sum of the k largest
  // per-block gains sum(p - lam)^+, so s >= (need - gains) / lam.
  bool LagrangeWithin(const std::vector<Live>& live, const LeafSet& cov, std::size_t k,
                      double need, std::size_t budget) {
    static constexpr double kScales[] = {0.25, 0.5, 1.0, 2.0};
    constexpr std::size_t kPrices = std::size(kScales);
    if (marginal_ <= 0.0) return true;
    gains_.assign(kPrices * live.size(), 0.0);
    for (std::size_t i = 0; i < live.size(); ++i) {
      scratch_ = *blocks_[live[i].cand_index];
      scratch_.subtract(cov);
      scratch_.for_each([&](std::size_t pos) {
        for (std::size_t j = 0; j < kPrices; ++j) {
          const double excess = scores_[pos] - kScales[j] * marginal_;
          if (excess > 0.0) gains_[j * live.size() + i] += excess;
        }
      });
    }
    const std::size_t take = std::min(k, live.size());
    for (std::size_t j = 0; j < kPrices; ++j) {
      auto first = gains_.begin() + static_cast<std::ptrdiff_t>(j * live.size());
      auto last = first + static_cast<std::ptrdiff_t>(live.size());
      std::partial_sort(first, first + static_cast<std::ptrdiff_t>(take), last, std::greater<>());
      double supply = 0.0;
      for (auto it = first; it != first + static_cast<std::ptrdiff_t>(take); ++it) supply += *it;
      const double lam = kScales[j] * marginal_;
      const double bound = (need - kBoundSlack - supply) / lam;
      if (bound > static_cast<double>(budget) + 1e-6) return false;
    }
    return true;
  }

  // Disjoint completions: for a leaf price lam, need - lam*s is at most the
  // sum of the k largest block gains (mass - lam*count)^+.
  bool BlockPriceWithin(const std::vector<Live>& live, std::size_t k, double need,
                        std::size_t budget) {
    static constexpr double kScales[] = {0.5, 1.0, 2.0, 4.0};
    if (marginal_ <= 0.0) return true;
    for (double scale : kScales) {
      const double lam = scale * marginal_;
      top_.clear();
      for (const Live& item : live) {
        const double gain = item.mass - lam * static_cast<double>(item.count);
        if (gain > 0.0) top_.push_back(gain);
      }
      const std::size_t take = std::min(k, top_.size());
      std::partial_sort(top_.begin(), top_.begin() + static_cast<std::ptrdiff_t>(take), top_.end(),
                        std::greater<>());
      double supply = 0.0;
      for (std::size_t i = 0; i < take; ++i) supply += top_[i];
      if ((need - kBoundSlack - supply) / lam > static_cast<double>(budget) + 1e-6) return false;
    }
    return true;
  }

  // Whether the two blocks together cover exactly the leaves of some single
  // node; selections holding both are beaten by the merged one.
  bool Merges(const LeafSet& a, const LeafSet& b) const {
    const auto [first, last] = block_index_.equal_range(a.hash_union(b));
    for (auto it = first; it != last; ++it)
      if (it->second->equals_union(a, b)) return true;
    return false;
  }

  bool MergesWithSelected(const LeafSet& block) {
    for (NodeId u : selected_)
      if (Merges(block, dag_.descendant_leaves(u))) return true;
    return false;
  }

  // Disjoint live blocks: a cardinality-constrained knapsack over
  // (leaf count, mass) bounds every completion.
  bool KnapsackWithin(const std::vector<Live>& live, std::size_t k, double need,
                      std::size_t budget) {
    const std::size_t width = budget + 1;
    dp_.assign((k + 1) * width, 0.0);
    for (const Live& item : live) {
      for (std::size_t c = k; c >= 1; --c) {
        double* row = dp_.data() + c * width;
        const double* prev = dp_.data() + (c - 1) * width;
        for (std::size_t s = budget; s >= item.count; --s) {
          const double with = prev[s - item.count] + item.mass;
          if (with > row[s]) row[s] = with;
          if (s == 0) break;
        }
      }
      if (dp_[k * width + budget] >= need - kBoundSlack) return true;
    }
    return dp_[k * width + budget] >= need - kBoundSlack;
  }

  // Whether adding `block` would leave some already selected node covered by
  // the others.
  bool MakesRedundant(const LeafSet& block) {
    for (std::size_t i = 0; i < selected_.size(); ++i) {
      scratch_ = block;
      for (std::size_t j = 0; j < selected_.size(); ++j)
        if (j != i) scratch_ |= dag_.descendant_leaves(selected_[j]);
      if (dag_.descendant_leaves(selected_[i]).is_subset_of(scratch_)) return true;
    }
    return false;
  }

  const SolveRequest& req_;
  const Dag& dag_;
  const ScoreVector& scores_;
  const double tau_eff_;
  const std::size_t m_;
  const bool forest_;
  const bool disjoint_;

  std::vector<double> block_mass_;
  std::vector<NodeId> cand_;
  std::vector<std::size_t> leaf_order_;
  std::vector<LeafSet> covered_;
  std::vector<std::size_t> sigma_;
  std::vector<double> mass_;
  std::vector<std::vector<Live>> live_;
  std::vector<std::vector<double>> suffix_;
  std::vector<NodeId> selected_;
  LeafSet scratch_;
  std::vector<double> top_;
  std::vector<double> dp_;
  std::vector<double> gains_;
  std::size_t pivot_ = 0;
  double marginal_ = 0.0;
  std::unordered_multimap<std::size_t, const LeafSet*> block_index_;
  std::vector<const LeafSet*> blocks_;  // by candidate position

  bool found_ = false;
  std::size_t best_sigma_ = 0;
  double best_mass_ = 0.0;
  std::vector<NodeId> best_ids_;
};

}  // namespace

std::optional<SolveResult> BranchAndBoundSolver::TrySolve(const SolveRequest& req) const {
  ValidateRequest(req);
  return BranchAndBound(req).Run();
}

std::optional<SolveResult> BruteForceSolver::TrySolve(const SolveRequest& req) const {
  ValidateRequest(req);
  const Dag& dag = req.dag;
  const std::size_t n = dag.node_count();
  if (n > kMaxNodes)
    Fail(ErrorCode::kTooLarge,
         fmt::format("brute force supports at most {} nodes, got {}", kMaxNodes, n));
  const std::size_t width = dag.leaf_count();

  // Leaf reachability by plain DFS over the child lists.
  std::vector<std::vector<char>> reach(n, std::vector<char>(width, 0));
  for (NodeId v = 0; v < n; ++v) {
    std::vector<NodeId> stack{v};
    std::vector<char> seen(n, 0);
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      if (seen[u]) continue;
      seen[u] = 1;
      if (dag.children(u).empty()) reach[v][*dag.leaf_index(u)] = 1;
      for (NodeId c : dag.children(u)) stack.push_back(c);
    }
  }

  const double tau_eff = req.tau - kMassSlack;
  const std::size_t max_size = std::min(req.m, n);
  bool found = false;
  std::size_t best_sigma = 0;
  double best_mass = 0.0;
  std::vector<NodeId> best_ids;
  std::vector<NodeId> ids;

  auto evaluate = [&] {
    std::size_t sigma = 0;
    double mass = 0.0;
    for (std::size_t pos = 0; pos < width; ++pos) {
      bool covered = false;
      for (NodeId v : ids) covered = covered || reach[v][pos];
      if (covered) {
        ++sigma;
        mass += req.scores[pos];
      }
    }
    if (!(mass >= tau_eff)) return;
    const Key cand{sigma, mass, &ids};
    const Key inc{best_sigma, best_mass, &best_ids};
    if (!found || KeyLess(cand, inc, req.tie_break)) {
      found = true;
      best_sigma = sigma;
      best_mass = mass;
      best_ids = ids;
    }
  };

  std::function<void(NodeId)> enumerate = [&](NodeId next) {
    evaluate();
    if (ids.size() == max_size) return;
    for (NodeId v = next; v < n; ++v) {
      ids.push_back(v);
      enumerate(v + 1);
      ids.pop_back();
    }
  };
  enumerate(0);

  if (!found) return std::nullopt;
  return MakeResult(req, best_ids);
}

const SetSolver& DefaultSolver() {
  static const BranchAndBoundSolver solver;
  return solver;
}

namespace {

SolveResult OrThrow(std::optional<SolveResult> result, const SolveRequest& req) {
  if (!result) {
    Fail(ErrorCode::kInfeasible,
         fmt::format("no set of at most m={} nodes reaches mass tau={:.17g}", req.m,
                     req.tau));
  }
  return *std::move(result);
}

}  // namespace

SolveResult Solve(const SolveRequest& req) {
  return OrThrow(DefaultSolver().TrySolve(req), req);
}

SolveResult SolveBruteForce(const SolveRequest& req) {
  return OrThrow(BruteForceSolver().TrySolve(req), req);
}

std::vector<NodeId> RedundancyReduce(const Dag& dag, std::span<const NodeId> node_ids) {
  std::vector<NodeId> kept(node_ids.begin(), node_ids.end());
  for (NodeId v : kept) dag.CheckId(v);
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  std::vector<NodeId> order = kept;
  for (NodeId v : order) {
    LeafSet others(dag.leaf_count());
    for (NodeId u : kept)
      if (u != v) others |= dag.descendant_leaves(u);
    if (dag.descendant_leaves(v).is_subset_of(others))
      kept.erase(std::find(kept.begin(), kept.end(), v));
  }
  return kept;
}

bool Precedes(const SolveResult& a, const SolveResult& b, TieBreak tie_break) {
  return KeyLess({a.set.size, a.set.mass, &a.set.node_ids},
                 {b.set.size, b.set.mass, &b.set.node_ids}, tie_break);
}

}  // namespace csp
