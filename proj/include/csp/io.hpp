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

// Text formats: DAG JSON, score/record JSONL, generator specs, calibration
// configs and outcomes.
//
//   DAG JSON     {"nodes": N, "edges": [[p, c], ...], "leaves": [ids],
//                 "labels": {"id": "name", ...}}   ("leaves", "labels" optional)
//   record JSONL {"probs": [...], "true_leaf": id, "dag": {DAG JSON}}
//                 one object per line; "true_leaf" and "dag" optional
//   generator    {"family": "...", "params": {...}, "seed": int}
//   calibration  {"guarantee": "marginal"|"pac", "epsilon": r, "delta": r,
//                 "m": int, "grid": [r, ...], "infeasible_is_miss": bool}

#ifndef CSP_IO_HPP_
#define CSP_IO_HPP_

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "csp/calibrate.hpp"
#include "csp/dag.hpp"
#include "csp/domains.hpp"

namespace csp {

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, const std::string& content);

std::string DagToJson(const Dag& dag);
// Throws kParseError on malformed input, kInvalidLeaves when "leaves" does not
// match the childless nodes, plus the Dag::Build errors.
Dag DagFromJson(const std::string& text);

std::vector<CalibrationRecord> ReadRecords(const std::string& text,
                                           std::shared_ptr<const Dag> shared_dag,
                                           ScoreValidation mode = ScoreValidation::kStrict);
// Records whose DAG is not `shared_dag` get an inline "dag".
std::string WriteRecords(const std::vector<CalibrationRecord>& records,
                         const std::shared_ptr<const Dag>& shared_dag);

GeneratorSpec GeneratorSpecFromJson(const std::string& text);

struct CalibrationConfig {
  std::optional<Guarantee> guarantee;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<std::size_t> m;
  std::optional<ThresholdGrid> grid;
  std::optional<bool> infeasible_is_miss;
};
// Unknown keys are rejected with kParseError.
CalibrationConfig CalibrationConfigFromJson(const std::string& text);

std::string OutcomeToJson(const CalibrationOutcome& outcome, const GuaranteeSpec& spec,
                          std::size_t m);
std::string StructuredSetToJson(const Dag& dag, const StructuredSet& set);

// 17 significant digits; reads back as the same double.
std::string FormatDouble(double value);

}  // namespace csp

#endif  // CSP_IO_HPP_
