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

#include "csp/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "csp/error.hpp"

namespace csp {

using nlohmann::json;
using nlohmann::ordered_json;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIoError, fmt::format("cannot open {}", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIoError, fmt::format("cannot write {}", path));
  out << content;
  if (!out) Fail(ErrorCode::kIoError, fmt::format("write to {} failed", path));
}

std::string FormatDouble(double value) { return fmt::format("{:.17g}", value); }

namespace {

json ParseJson(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    Fail(ErrorCode::kParseError, fmt::format("{}: {}", what, e.what()));
  }
}

NodeId AsId(const json& v, const char* what) {
  if (!v.is_number_unsigned() || v.get<std::uint64_t>() > 0xffffffffull)
    Fail(ErrorCode::kParseError, fmt::format("{}: expected a node id, got {}", what, v.dump()));
  return static_cast<NodeId>(v.get<std::uint64_t>());
}

double AsNumber(const json& v, const char* what) {
  if (!v.is_number()) Fail(ErrorCode::kParseError, fmt::format("{}: expected a number", what));
  return v.get<double>();
}

std::uint64_t AsCount(const json& v, const char* what) {
  if (!v.is_number_unsigned())
    Fail(ErrorCode::kParseError, fmt::format("{}: expected a non-negative integer", what));
  return v.get<std::uint64_t>();
}

void RejectUnknownKeys(const json& obj, std::initializer_list<const char*> allowed,
                       const char* what) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known)
      Fail(ErrorCode::kParseError, fmt::format("{}: unknown key \"{}\"", what, item.key()));
  }
}

Dag DagFromJsonValue(const json& j) {
  if (!j.is_object()) Fail(ErrorCode::kParseError, "DAG JSON must be an object");
  RejectUnknownKeys(j, {"nodes", "edges", "leaves", "labels"}, "DAG JSON");
  if (!j.contains("nodes")) Fail(ErrorCode::kParseError, "DAG JSON: missing \"nodes\"");
  const std::uint64_t n = AsCount(j.at("nodes"), "nodes");
  std::vector<Edge> edges;
  if (j.contains("edges")) {
    const json& arr = j.at("edges");
    if (!arr.is_array()) Fail(ErrorCode::kParseError, "DAG JSON: \"edges\" must be an array");
    for (const json& e : arr) {
      if (!e.is_array() || e.size() != 2)
        Fail(ErrorCode::kParseError, "DAG JSON: each edge is a [parent, child] pair");
      edges.push_back({AsId(e[0], "edge"), AsId(e[1], "edge")});
    }
  }
  std::vector<std::string> labels;
  if (j.contains("labels")) {
    const json& lab = j.at("labels");
    if (!lab.is_object()) Fail(ErrorCode::kParseError, "DAG JSON: \"labels\" must be an object");
    labels.resize(n);
    std::vector<char> seen(n, 0);
    for (const auto& item : lab.items()) {
      std::size_t used = 0;
      unsigned long long id = 0;
      try {
        id = std::stoull(item.key(), &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != item.key().size() || item.key().empty())
        Fail(ErrorCode::kParseError, fmt::format("label key \"{}\" is not an id", item.key()));
      if (id >= n) Fail(ErrorCode::kInvalidId, fmt::format("label for node {} >= {}", id, n));
      if (!item.value().is_string())
        Fail(ErrorCode::kParseError, fmt::format("label of node {} must be a string", id));
      labels[id] = item.value().get<std::string>();
      seen[id] = 1;
    }
    for (std::size_t v = 0; v < n; ++v)
      if (!seen[v]) labels[v] = std::to_string(v);
  }
  Dag dag = Dag::Build(n, std::move(edges), std::move(labels));
  if (j.contains("leaves")) {
    const json& arr = j.at("leaves");
    if (!arr.is_array()) Fail(ErrorCode::kParseError, "DAG JSON: \"leaves\" must be an array");
    std::set<NodeId> given;
    for (const json& v : arr) given.insert(AsId(v, "leaves"));
    const std::set<NodeId> actual(dag.leaves().begin(), dag.leaves().end());
    if (given != actual)
      Fail(ErrorCode::kInvalidLeaves, "\"leaves\" differs from the set of childless nodes");
  }
  return dag;
}

ordered_json DagToJsonValue(const Dag& dag) {
  ordered_json j;
  j["nodes"] = dag.node_count();
  ordered_json edges = ordered_json::array();
  for (const Edge& e : dag.edges()) edges.push_back({e.parent, e.child});
  j["edges"] = std::move(edges);
  j["leaves"] = dag.leaves();
  if (dag.has_labels()) {
    ordered_json labels = ordered_json::object();
    for (NodeId v = 0; v < dag.node_count(); ++v) labels[std::to_string(v)] = dag.label(v);
    j["labels"] = std::move(labels);
  }
  return j;
}

}  // namespace

std::string DagToJson(const Dag& dag) { return DagToJsonValue(dag).dump() + "\n"; }

Dag DagFromJson(const std::string& text) { return DagFromJsonValue(ParseJson(text, "DAG JSON")); }

std::vector<CalibrationRecord> ReadRecords(const std::string& text,
                                           std::shared_ptr<const Dag> shared_dag,
                                           ScoreValidation mode) {
  std::vector<CalibrationRecord> records;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      Fail(ErrorCode::kParseError, fmt::format("records line {}: {}", line_no, e.what()));
    }
    if (!j.is_object())
      Fail(ErrorCode::kParseError, fmt::format("records line {}: expected an object", line_no));
    RejectUnknownKeys(j, {"probs", "true_leaf", "dag"}, "record");
    CalibrationRecord rec;
    if (j.contains("dag")) {
      rec.dag = std::make_shared<const Dag>(DagFromJsonValue(j.at("dag")));
    } else {
      if (!shared_dag)
        Fail(ErrorCode::kInvalidArgument,
             fmt::format("records line {}: no inline \"dag\" and no shared DAG", line_no));
      rec.dag = shared_dag;
    }
    if (!j.contains("probs") || !j.at("probs").is_array())
      Fail(ErrorCode::kParseError, fmt::format("records line {}: missing \"probs\"", line_no));
    std::vector<double> probs;
    for (const json& p : j.at("probs")) probs.push_back(AsNumber(p, "probs"));
    try {
      rec.scores = ScoreVector::Create(*rec.dag, std::move(probs), mode);
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("records line {}: {}", line_no, e.what()));
    }
    if (j.contains("true_leaf") && !j.at("true_leaf").is_null()) {
      const NodeId leaf = AsId(j.at("true_leaf"), "true_leaf");
      rec.dag->CheckId(leaf);
      if (!rec.dag->is_leaf(leaf))
        Fail(ErrorCode::kInvalidId,
             fmt::format("records line {}: true_leaf {} is not a leaf", line_no, leaf));
      rec.true_leaf = leaf;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::string WriteRecords(const std::vector<CalibrationRecord>& records,
                         const std::shared_ptr<const Dag>& shared_dag) {
  std::string out;
  for (const CalibrationRecord& rec : records) {
    ordered_json j;
    j["probs"] = std::vector<double>(rec.scores.probs().begin(), rec.scores.probs().end());
    if (rec.true_leaf) j["true_leaf"] = *rec.true_leaf;
    if (rec.dag && rec.dag != shared_dag) j["dag"] = DagToJsonValue(*rec.dag);
    out += j.dump();
    out += '\n';
  }
  return out;
}

GeneratorSpec GeneratorSpecFromJson(const std::string& text) {
  const json j = ParseJson(text, "generator spec");
  if (!j.is_object()) Fail(ErrorCode::kParseError, "generator spec must be an object");
  RejectUnknownKeys(j, {"family", "params", "seed"}, "generator spec");
  GeneratorSpec spec;
  if (!j.contains("family") || !j.at("family").is_string())
    Fail(ErrorCode::kParseError, "generator spec: missing \"family\"");
  spec.family = j.at("family").get<std::string>();
  if (j.contains("seed")) spec.seed = AsCount(j.at("seed"), "seed");
  if (j.contains("params")) {
    const json& params = j.at("params");
    if (!params.is_object())
      Fail(ErrorCode::kParseError, "generator spec: \"params\" must be an object");
    for (const auto& item : params.items()) {
      if (item.key() == "atoms" && item.value().is_array()) {
        for (const json& atom : item.value()) {
          if (!atom.is_array()) Fail(ErrorCode::kParseError, "atoms must be arrays of numbers");
          std::vector<double> probs;
          for (const json& p : atom) probs.push_back(AsNumber(p, "atoms"));
          spec.atoms.push_back(std::move(probs));
        }
      } else if (item.key() == "weights" && item.value().is_array()) {
        for (const json& w : item.value()) spec.weights.push_back(AsNumber(w, "weights"));
      } else {
        spec.params[item.key()] = AsNumber(item.value(), item.key().c_str());
      }
    }
  }
  return spec;
}

CalibrationConfig CalibrationConfigFromJson(const std::string& text) {
  const json j = ParseJson(text, "calibration config");
  if (!j.is_object()) Fail(ErrorCode::kParseError, "calibration config must be an object");
  RejectUnknownKeys(j, {"guarantee", "epsilon", "delta", "m", "grid", "infeasible_is_miss"},
                    "calibration config");
  CalibrationConfig cfg;
  if (j.contains("guarantee")) {
    const json& g = j.at("guarantee");
    if (g == "marginal")
      cfg.guarantee = Guarantee::kMarginal;
    else if (g == "pac")
      cfg.guarantee = Guarantee::kPac;
    else
      Fail(ErrorCode::kParseError, fmt::format("unknown guarantee {}", g.dump()));
  }
  if (j.contains("epsilon")) cfg.epsilon = AsNumber(j.at("epsilon"), "epsilon");
  if (j.contains("delta")) cfg.delta = AsNumber(j.at("delta"), "delta");
  if (j.contains("m")) {
    const auto m = AsCount(j.at("m"), "m");
    if (m < 1) Fail(ErrorCode::kInvalidArgument, "m must be at least 1");
    cfg.m = m;
  }
  if (j.contains("grid")) {
    if (!j.at("grid").is_array()) Fail(ErrorCode::kParseError, "\"grid\" must be an array");
    std::vector<double> values;
    for (const json& v : j.at("grid")) values.push_back(AsNumber(v, "grid"));
    cfg.grid = ThresholdGrid::Create(std::move(values));
  }
  if (j.contains("infeasible_is_miss")) {
    if (!j.at("infeasible_is_miss").is_boolean())
      Fail(ErrorCode::kParseError, "\"infeasible_is_miss\" must be a boolean");
    cfg.infeasible_is_miss = j.at("infeasible_is_miss").get<bool>();
  }
  return cfg;
}

std::string OutcomeToJson(const CalibrationOutcome& outcome, const GuaranteeSpec& spec,
                          std::size_t m) {
  ordered_json j;
  j["guarantee"] = spec.kind == Guarantee::kPac ? "pac" : "marginal";
  j["epsilon"] = spec.epsilon;
  if (spec.delta) j["delta"] = *spec.delta;
  j["m"] = m;
  j["n"] = outcome.n;
  j["sentinel"] = outcome.sentinel();
  if (outcome.sentinel())
    j["tau_hat"] = "FULL_SET";
  else
    j["tau_hat"] = outcome.tau_hat.value();
  if (outcome.index_hat)
    j["index_hat"] = *outcome.index_hat;
  else
    j["index_hat"] = nullptr;
  if (spec.kind == Guarantee::kPac) {
    const auto l_hat = ComputeLHat(outcome.n, spec.epsilon, *spec.delta);
    if (l_hat)
      j["l_hat"] = *l_hat;
    else
      j["l_hat"] = nullptr;
  }
  ordered_json audit = ordered_json::array();
  for (const ThresholdAudit& a : outcome.per_threshold)
    audit.push_back({{"tau", a.tau}, {"misses", a.misses}, {"pass", a.pass}});
  j["per_threshold"] = std::move(audit);
  return j.dump(2) + "\n";
}

std::string StructuredSetToJson(const Dag& dag, const StructuredSet& set) {
  ordered_json j;
  ordered_json labels = ordered_json::array();
  for (NodeId v : set.node_ids) labels.push_back(dag.label(v));
  j["nodes"] = std::move(labels);
  j["node_ids"] = set.node_ids;
  j["covered_leaves"] = set.covered_leaves;
  j["mass"] = set.mass;
  j["size"] = set.size;
  return j.dump(2) + "\n";
}

}  // namespace csp
