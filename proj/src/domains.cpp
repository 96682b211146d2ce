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

#include "csp/domains.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "csp/error.hpp"
#include "csp/io.hpp"

namespace csp {

namespace {

constexpr std::size_t kMaxDigitLeaves = 1'000'000;
constexpr std::int64_t kMaxIntervalSpan = 500;

std::string DigitLabel(const std::vector<std::size_t>& prefix, std::size_t k,
                       std::size_t alphabet) {
  if (alphabet <= 10) {
    std::string s;
    for (std::size_t d : prefix) s += static_cast<char>('0' + d);
    for (std::size_t i = prefix.size(); i < k; ++i) s += "∅";
    return s;
  }
  std::string s = "[";
  for (std::size_t i = 0; i < k; ++i) {
    if (i) s += ",";
    s += i < prefix.size() ? std::to_string(prefix[i]) : "∅";
  }
  return s + "]";
}

}  // namespace

Dag BuildDigitTree(const DigitTreeSpec& spec) {
  if (spec.k < 1 || spec.alphabet_size < 1)
    Fail(ErrorCode::kInvalidArgument, "digit tree needs k >= 1 and a non-empty alphabet");
  std::vector<std::size_t> layer_size{1};
  std::size_t total = 1;
  for (std::size_t i = 1; i <= spec.k; ++i) {
    if (layer_size.back() > kMaxDigitLeaves / spec.alphabet_size)
      Fail(ErrorCode::kTooLarge,
           fmt::format("{}^{} leaves exceed {}", spec.alphabet_size, spec.k, kMaxDigitLeaves));
    layer_size.push_back(layer_size.back() * spec.alphabet_size);
    total += layer_size.back();
  }

  std::vector<Edge> edges;
  edges.reserve(total - 1);
  std::vector<std::string> labels;
  labels.reserve(total);
  std::size_t layer_start = 0;
  for (std::size_t depth = 0; depth <= spec.k; ++depth) {
    const std::size_t next_start = layer_start + layer_size[depth];
    for (std::size_t i = 0; i < layer_size[depth]; ++i) {
      std::vector<std::size_t> prefix(depth);
      for (std::size_t x = i, p = depth; p-- > 0; x /= spec.alphabet_size)
        prefix[p] = x % spec.alphabet_size;
      labels.push_back(DigitLabel(prefix, spec.k, spec.alphabet_size));
      if (depth < spec.k)
        for (std::size_t d = 0; d < spec.alphabet_size; ++d)
          edges.push_back({static_cast<NodeId>(layer_start + i),
                           static_cast<NodeId>(next_start + i * spec.alphabet_size + d)});
    }
    layer_start = next_start;
  }
  return Dag::Build(total, std::move(edges), std::move(labels));
}

Dag BuildIntervalDag(const IntervalDagSpec& spec) {
  if (spec.lo > spec.hi)
    Fail(ErrorCode::kInvalidArgument, fmt::format("empty range [{}, {}]", spec.lo, spec.hi));
  if (spec.hi - spec.lo > kMaxIntervalSpan)
    Fail(ErrorCode::kTooLarge,
         fmt::format("interval range spans {} > {}", spec.hi - spec.lo, kMaxIntervalSpan));
  const std::size_t n = static_cast<std::size_t>(spec.hi - spec.lo + 1);
  // offset[w] = id of the first interval of width w.
  std::vector<std::size_t> offset(n + 2, 0);
  for (std::size_t w = n, next = 0; w >= 1; --w) {
    offset[w] = next;
    next += n - w + 1;
  }
  auto id = [&](std::size_t start, std::size_t width) {
    return static_cast<NodeId>(offset[width] + start);
  };
  const std::size_t total = n * (n + 1) / 2;
  std::vector<std::string> labels(total);
  std::vector<Edge> edges;
  edges.reserve(2 * total);
  for (std::size_t w = n; w >= 1; --w) {
    for (std::size_t s = 0; s + w <= n; ++s) {
      const std::int64_t a = spec.lo + static_cast<std::int64_t>(s);
      const std::int64_t b = a + static_cast<std::int64_t>(w) - 1;
      labels[id(s, w)] = w == 1 ? fmt::format("[{}]", a) : fmt::format("[{}, {}]", a, b);
      if (w > 1) {
        edges.push_back({id(s, w), id(s, w - 1)});
        edges.push_back({id(s, w), id(s + 1, w - 1)});
      }
    }
  }
  return Dag::Build(total, std::move(edges), std::move(labels));
}

ScoreVector ProductDigitScores(const Dag& digit_tree,
                               std::span<const std::vector<double>> per_position) {
  if (per_position.empty())
    Fail(ErrorCode::kInvalidDistribution, "no per-position distributions");
  std::size_t leaves = 1;
  for (std::size_t i = 0; i < per_position.size(); ++i) {
    const auto& dist = per_position[i];
    if (dist.empty()) Fail(ErrorCode::kInvalidDistribution, fmt::format("position {} is empty", i));
    double sum = 0.0;
    for (double p : dist) {
      if (!std::isfinite(p) || p < 0.0)
        Fail(ErrorCode::kInvalidDistribution,
             fmt::format("position {} has probability {}", i, p));
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      Fail(ErrorCode::kInvalidDistribution,
           fmt::format("position {} sums to {:.17g}", i, sum));
    leaves *= dist.size();
  }
  if (leaves != digit_tree.leaf_count())
    Fail(ErrorCode::kDagMismatch,
         fmt::format("{} digit combinations for {} leaves", leaves, digit_tree.leaf_count()));

  std::vector<double> probs(leaves, 1.0);
  for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
    std::size_t x = leaf;
    for (std::size_t p = per_position.size(); p-- > 0;) {
      const auto& dist = per_position[p];
      probs[leaf] *= dist[x % dist.size()];
      x /= dist.size();
    }
  }
  return ScoreVector::Create(digit_tree, std::move(probs));
}

Dag ParseEdgeList(const std::string& text) {
  std::unordered_map<std::string, NodeId> ids;
  std::vector<std::string> labels;
  std::vector<Edge> edges;
  auto intern = [&](const std::string& name) {
    auto [it, inserted] = ids.emplace(name, static_cast<NodeId>(labels.size()));
    if (inserted) labels.push_back(name);
    return it->second;
  };
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      Fail(ErrorCode::kParseError,
           fmt::format("line {}: expected \"parent<TAB>child\"", line_no));
    const std::string parent = line.substr(0, tab);
    const std::string child = line.substr(tab + 1);
    if (parent.empty() || child.empty())
      Fail(ErrorCode::kParseError, fmt::format("line {}: empty node name", line_no));
    const NodeId p = intern(parent);
    const NodeId c = intern(child);
    edges.push_back({p, c});
  }
  if (edges.empty()) Fail(ErrorCode::kParseError, "hierarchy has no edges");
  const std::size_t n = labels.size();
  return Dag::Build(n, std::move(edges), std::move(labels));
}

Dag LoadHierarchy(const std::string& path) {
  const std::string text = ReadFile(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) Fail(ErrorCode::kParseError, fmt::format("{} is empty", path));
  if (text[first] == '{') return DagFromJson(text);
  return ParseEdgeList(text);
}

namespace {

const std::map<std::string, std::vector<std::pair<std::string, double>>>& FamilyDefaults() {
  static const std::map<std::string, std::vector<std::pair<std::string, double>>> defaults{
      {"dirichlet", {{"concentration", 2.0}, {"noise", 1.0}, {"atoms", 256}, {"corruption", 0.0}}},
      {"softmax", {{"scale", 3.0}, {"temperature", 1.0}, {"atoms", 256}, {"corruption", 0.0}}},
      {"product-digit",
       {{"alphabet", 10}, {"concentration", 10.0}, {"noise", 1.0}, {"atoms", 256}, {"corruption", 0.0}}},
      {"explicit", {{"corruption", 0.0}}},
  };
  return defaults;
}

std::vector<double> DirichletDraw(Rng& rng, std::size_t size, std::size_t peak,
                                  double concentration, double noise) {
  std::vector<double> x(size);
  double sum = 0.0;
  for (std::size_t j = 0; j < size; ++j) {
    const double alpha = noise / static_cast<double>(size) + (j == peak ? concentration : 0.0);
    x[j] = alpha > 0.0 ? std::gamma_distribution<double>(alpha, 1.0)(rng) : 0.0;
    sum += x[j];
  }
  if (!(sum > 0.0)) {
    std::fill(x.begin(), x.end(), 0.0);
    x[peak] = 1.0;
    return x;
  }
  for (double& v : x) v /= sum;
  return x;
}

}  // namespace

ScoreGenerator::ScoreGenerator(std::shared_ptr<const Dag> dag, const GeneratorSpec& spec)
    : dag_(std::move(dag)), family_(spec.family) {
  if (!dag_) Fail(ErrorCode::kInvalidArgument, "generator needs a DAG");
  const auto& defaults = FamilyDefaults();
  auto fam = defaults.find(spec.family);
  if (fam == defaults.end())
    Fail(ErrorCode::kUnknownGenerator, fmt::format("unknown generator family \"{}\"", spec.family));
  for (const auto& [key, value] : fam->second) params_[key] = value;
  for (const auto& [key, value] : spec.params) {
    if (!params_.count(key))
      Fail(ErrorCode::kInvalidArgument,
           fmt::format("generator \"{}\" has no parameter \"{}\"", spec.family, key));
    if (!std::isfinite(value))
      Fail(ErrorCode::kInvalidArgument, fmt::format("parameter {} is not finite", key));
    params_[key] = value;
  }
  corruption_ = params_.at("corruption");
  if (corruption_ < 0.0 || corruption_ > 1.0)
    Fail(ErrorCode::kInvalidArgument, "corruption must lie in [0,1]");
  for (const char* key : {"concentration", "noise", "scale"})
    if (params_.count(key) && params_.at(key) < 0.0)
      Fail(ErrorCode::kInvalidArgument, fmt::format("{} must be non-negative", key));
  if (params_.count("temperature") && !(params_.at("temperature") > 0.0))
    Fail(ErrorCode::kInvalidArgument, "temperature must be positive");

  const std::size_t leaves = dag_->leaf_count();
  if (family_ == "product-digit") {
    const double alphabet = params_.at("alphabet");
    if (alphabet < 1 || alphabet != std::floor(alphabet))
      Fail(ErrorCode::kInvalidArgument, "alphabet must be a positive integer");
    std::size_t a = static_cast<std::size_t>(alphabet), count = 1, k = 0;
    while (count < leaves && a > 1) {
      count *= a;
      ++k;
    }
    if (count != leaves || k == 0)
      Fail(ErrorCode::kInvalidArgument,
           fmt::format("{} leaves is not a power of alphabet {}", leaves, a));
    params_["k"] = static_cast<double>(k);
  }

  if (family_ == "explicit") {
    if (spec.atoms.empty())
      Fail(ErrorCode::kInvalidArgument, "explicit generator needs at least one atom");
    if (!spec.weights.empty() && spec.weights.size() != spec.atoms.size())
      Fail(ErrorCode::kInvalidArgument, "explicit generator: one weight per atom");
    for (std::size_t a = 0; a < spec.atoms.size(); ++a) {
      atoms_.push_back(ScoreVector::Create(*dag_, spec.atoms[a]));
      const double w = spec.weights.empty() ? 1.0 : spec.weights[a];
      if (!(w >= 0.0) || !std::isfinite(w))
        Fail(ErrorCode::kInvalidArgument, "explicit generator: weights must be non-negative");
      weights_.push_back(w);
    }
  } else {
    const double atoms = params_.at("atoms");
    if (atoms < 0 || atoms > 10'000 || atoms != std::floor(atoms))
      Fail(ErrorCode::kInvalidArgument, "atoms must be an integer in [0, 10000]");
    Rng rng(DeriveSeed(spec.seed, 0x61746f6d73ull));
    for (std::size_t a = 0; a < static_cast<std::size_t>(atoms); ++a) {
      atoms_.push_back(ScoreVector::Create(*dag_, DrawScores(rng)));
      weights_.push_back(1.0);
    }
  }
  for (const ScoreVector& s : atoms_) truth_.push_back(Truth(s.probs()));
  for (double w : weights_) weight_total_ += w;
  if (enumerable() && !(weight_total_ > 0.0))
    Fail(ErrorCode::kInvalidArgument, "atom weights sum to zero");
  for (double& w : weights_) w /= weight_total_;
  weight_total_ = 1.0;
}

std::vector<double> ScoreGenerator::DrawScores(Rng& rng) const {
  const std::size_t leaves = dag_->leaf_count();
  if (family_ == "dirichlet") {
    const std::size_t peak = UniformIndex(rng, leaves);
    return DirichletDraw(rng, leaves, peak, params_.at("concentration"), params_.at("noise"));
  }
  if (family_ == "softmax") {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> logits(leaves);
    const double scale = params_.at("scale") / params_.at("temperature");
    for (double& z : logits) z = scale * normal(rng);
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double& z : logits) sum += (z = std::exp(z - top));
    for (double& z : logits) z /= sum;
    return logits;
  }
  // product-digit
  const auto alphabet = static_cast<std::size_t>(params_.at("alphabet"));
  const auto k = static_cast<std::size_t>(params_.at("k"));
  std::vector<std::vector<double>> positions;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t digit = UniformIndex(rng, alphabet);
    positions.push_back(
        DirichletDraw(rng, alphabet, digit, params_.at("concentration"), params_.at("noise")));
  }
  std::vector<double> probs(leaves, 1.0);
  for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
    std::size_t x = leaf;
    for (std::size_t p = k; p-- > 0; x /= alphabet) probs[leaf] *= positions[p][x % alphabet];
  }
  double sum = 0.0;
  for (double v : probs) sum += v;
  for (double& v : probs) v /= sum;
  return probs;
}

std::vector<double> ScoreGenerator::Truth(std::span<const double> probs) const {
  std::vector<double> truth(probs.begin(), probs.end());
  if (corruption_ > 0.0) {
    const double uniform = 1.0 / static_cast<double>(truth.size());
    for (double& p : truth) p = (1.0 - corruption_) * p + corruption_ * uniform;
  }
  return truth;
}

ScoreGenerator::AtomDraw ScoreGenerator::DrawAtom(Rng& rng) const {
  if (!enumerable())
    Fail(ErrorCode::kNotEnumerable, fmt::format("generator \"{}\" has no atoms", family_));
  std::size_t atom;
  if (family_ == "explicit")
    atom = DrawCategorical(rng, weights_, weight_total_);
  else
    atom = UniformIndex(rng, atoms_.size());
  const auto& truth = truth_[atom];
  double total = 0.0;
  for (double p : truth) total += p;
  return {atom, DrawCategorical(rng, truth, total)};
}

CalibrationRecord ScoreGenerator::Draw(Rng& rng) const {
  CalibrationRecord rec;
  rec.dag = dag_;
  if (enumerable()) {
    const AtomDraw d = DrawAtom(rng);
    rec.scores = atoms_[d.atom];
    rec.true_leaf = dag_->leaves()[d.true_position];
    return rec;
  }
  rec.scores = ScoreVector::Create(*dag_, DrawScores(rng));
  const auto truth = Truth(rec.scores.probs());
  double total = 0.0;
  for (double p : truth) total += p;
  rec.true_leaf = dag_->leaves()[DrawCategorical(rng, truth, total)];
  return rec;
}

std::vector<CalibrationRecord> SampleSyntheticRecords(std::shared_ptr<const Dag> dag,
                                                      const GeneratorSpec& spec,
                                                      std::size_t n, std::uint64_t seed) {
  const ScoreGenerator gen(std::move(dag), spec);
  Rng rng(DeriveSeed(seed, 0));
  std::vector<CalibrationRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) records.push_back(gen.Draw(rng));
  return records;
}

}  // namespace csp
