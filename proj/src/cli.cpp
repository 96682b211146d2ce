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

#include "csp/cli.hpp"

#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "csp/calibrate.hpp"
#include "csp/domains.hpp"
#include "csp/error.hpp"
#include "csp/evalharness.hpp"
#include "csp/io.hpp"
#include "csp/parallel.hpp"

namespace csp {
namespace {

constexpr std::size_t kDefaultM = 4;

struct Flags {
  std::string kind;
  std::size_t k = 2;
  std::size_t alphabet = 10;
  long long lo = 0;
  long long hi = 0;
  std::string input;
  std::string dag;
  std::string records;
  std::string scores;
  std::string config;
  std::string generator;
  std::string out;
  std::string guarantee;
  std::vector<double> epsilon;
  std::vector<double> delta;
  std::vector<std::size_t> m;
  std::string grid;
  std::string tau;
  std::size_t n = 0;
  std::optional<std::size_t> n_trials;
  std::optional<std::size_t> n_cal;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool strict = false;
  bool infeasible_is_miss = false;
  std::string format = "csv";
};

class Context {
 public:
  Context(const Flags& flags, std::ostream& out, std::shared_ptr<spdlog::logger> log)
      : flags_(flags), out_(out), log_(std::move(log)) {}

  void Emit(const std::string& content) const {
    if (flags_.out.empty()) {
      out_ << content;
      out_.flush();
    } else {
      WriteFile(flags_.out, content);
    }
  }
  spdlog::logger& log() const { return *log_; }

 private:
  const Flags& flags_;
  std::ostream& out_;
  std::shared_ptr<spdlog::logger> log_;
};

Guarantee ParseGuarantee(const std::string& name) {
  if (name == "marginal") return Guarantee::kMarginal;
  if (name == "pac") return Guarantee::kPac;
  Fail(ErrorCode::kInvalidArgument, fmt::format("unknown guarantee \"{}\"", name));
}

double ParseReal(const std::string& text, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size())
    Fail(ErrorCode::kInvalidArgument, fmt::format("{}: \"{}\" is not a number", what, text));
  return v;
}

ThresholdGrid ParseGrid(const std::string& text) {
  if (text == "default") return ThresholdGrid::Default();
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    values.push_back(ParseReal(text.substr(start, comma - start), "--grid"));
    start = comma + 1;
  }
  return ThresholdGrid::Create(std::move(values));
}

TauHat ParseTau(const std::string& text) {
  if (text == "FULL_SET") return TauHat::FullSet();
  return TauHat::At(ParseReal(text, "--tau"));
}

double Single(const std::vector<double>& v, const char* flag) {
  if (v.size() != 1)
    Fail(ErrorCode::kInvalidArgument, fmt::format("{} takes a single value here", flag));
  return v.front();
}

std::size_t SingleM(const Flags& flags, std::size_t fallback) {
  if (flags.m.empty()) return fallback;
  if (flags.m.size() != 1) Fail(ErrorCode::kInvalidArgument, "--m takes a single value here");
  if (flags.m.front() < 1) Fail(ErrorCode::kInvalidArgument, "m must be at least 1");
  return flags.m.front();
}

std::shared_ptr<const Dag> LoadDag(const Flags& flags) {
  if (flags.dag.empty()) Fail(ErrorCode::kInvalidArgument, "--dag is required");
  return std::make_shared<const Dag>(DagFromJson(ReadFile(flags.dag)));
}

std::vector<CalibrationRecord> LoadRecords(const Flags& flags,
                                           const std::shared_ptr<const Dag>& dag) {
  if (flags.records.empty()) Fail(ErrorCode::kInvalidArgument, "--records is required");
  return ReadRecords(ReadFile(flags.records), dag);
}

GeneratorSpec LoadGenerator(const Flags& flags) {
  if (flags.generator.empty()) Fail(ErrorCode::kInvalidArgument, "--generator is required");
  const std::string& g = flags.generator;
  if (g.front() == '{') return GeneratorSpecFromJson(g);
  if (g == "dirichlet" || g == "softmax" || g == "product-digit") {
    GeneratorSpec spec;
    spec.family = g;
    return spec;
  }
  return GeneratorSpecFromJson(ReadFile(g));
}

CalibrationOptions MakeOptions(const Flags& flags, bool infeasible_is_miss) {
  if (flags.jobs < 1) Fail(ErrorCode::kInvalidArgument, "--jobs must be at least 1");
  CalibrationOptions options;
  options.jobs = flags.jobs;
  options.infeasible_is_miss = infeasible_is_miss;
  return options;
}

int CmdBuildDag(const Flags& flags, const Context& ctx) {
  Dag dag = [&] {
    if (flags.kind == "digit-tree") return BuildDigitTree({flags.k, flags.alphabet});
    if (flags.kind == "interval") return BuildIntervalDag({flags.lo, flags.hi});
    if (flags.kind == "from-file") {
      if (flags.input.empty()) Fail(ErrorCode::kInvalidArgument, "--input is required");
      return LoadHierarchy(flags.input);
    }
    Fail(ErrorCode::kInvalidArgument, fmt::format("unknown DAG kind \"{}\"", flags.kind));
  }();
  ctx.log().info("built DAG with {} nodes and {} leaves", dag.node_count(), dag.leaf_count());
  ctx.Emit(DagToJson(dag));
  return kExitOk;
}

struct ResolvedCalibration {
  GuaranteeSpec spec;
  std::size_t m;
  ThresholdGrid grid;
  bool infeasible_is_miss;
};

ResolvedCalibration ResolveCalibration(const Flags& flags) {
  CalibrationConfig cfg;
  if (!flags.config.empty()) cfg = CalibrationConfigFromJson(ReadFile(flags.config));
  if (!flags.guarantee.empty()) cfg.guarantee = ParseGuarantee(flags.guarantee);
  if (!flags.epsilon.empty()) cfg.epsilon = Single(flags.epsilon, "--epsilon");
  if (!flags.delta.empty()) cfg.delta = Single(flags.delta, "--delta");
  if (!flags.m.empty()) cfg.m = SingleM(flags, kDefaultM);
  if (!flags.grid.empty()) cfg.grid = ParseGrid(flags.grid);
  if (flags.infeasible_is_miss) cfg.infeasible_is_miss = true;

  const Guarantee kind = cfg.guarantee.value_or(cfg.delta ? Guarantee::kPac
                                                          : Guarantee::kMarginal);
  if (!cfg.epsilon) Fail(ErrorCode::kInvalidArgument, "epsilon is required");
  GuaranteeSpec spec{kind, *cfg.epsilon, kind == Guarantee::kPac ? cfg.delta : std::nullopt};
  if (kind == Guarantee::kMarginal && cfg.delta)
    Fail(ErrorCode::kInvalidArgument, "delta only applies to the PAC guarantee");
  spec.Validate();
  const std::size_t m = cfg.m.value_or(kDefaultM);
  if (m < 1) Fail(ErrorCode::kInvalidArgument, "m must be at least 1");
  return {spec, m, cfg.grid.value_or(ThresholdGrid::Default()),
          cfg.infeasible_is_miss.value_or(false)};
}

int CmdCalibrate(const Flags& flags, const Context& ctx) {
  const ResolvedCalibration rc = ResolveCalibration(flags);
  const auto dag = LoadDag(flags);
  const auto records = LoadRecords(flags, dag);
  const CalibrationOutcome outcome =
      EstimateTau(records, rc.grid, rc.spec, rc.m, MakeOptions(flags, rc.infeasible_is_miss));
  ctx.log().info("calibrated on {} records, {} thresholds tested", outcome.n,
                 outcome.per_threshold.size());
  ctx.Emit(OutcomeToJson(outcome, rc.spec, rc.m));
  return flags.strict && outcome.sentinel() ? kExitSentinel : kExitOk;
}

int CmdPredict(const Flags& flags, const Context& ctx) {
  if (flags.tau.empty()) Fail(ErrorCode::kInvalidArgument, "--tau is required");
  const TauHat tau = ParseTau(flags.tau);
  const std::size_t m = SingleM(flags, kDefaultM);
  const auto dag = LoadDag(flags);
  if (flags.scores.empty() == flags.records.empty())
    Fail(ErrorCode::kInvalidArgument, "exactly one of --scores and --records is required");

  auto predict = [&](const ScoreVector& scores) {
    if (tau.is_full_set()) {
      std::vector<NodeId> roots(dag->roots().begin(), dag->roots().end());
      return StructuredSetToJson(*dag, MakeStructuredSet(*dag, scores, roots));
    }
    return StructuredSetToJson(*dag, Solve({*dag, scores, tau.value(), m, TieBreak::kMinMass}).set);
  };

  if (!flags.scores.empty()) {
    const nlohmann::json j = [&] {
      try {
        return nlohmann::json::parse(ReadFile(flags.scores));
      } catch (const nlohmann::json::parse_error& e) {
        Fail(ErrorCode::kParseError, fmt::format("scores: {}", e.what()));
      }
    }();
    if (!j.is_array()) Fail(ErrorCode::kParseError, "scores must be a JSON array of numbers");
    std::vector<double> probs;
    for (const auto& v : j) {
      if (!v.is_number()) Fail(ErrorCode::kParseError, "scores must be numbers");
      probs.push_back(v.get<double>());
    }
    ctx.Emit(predict(ScoreVector::Create(*dag, probs)));
    return kExitOk;
  }
  const auto records = LoadRecords(flags, dag);
  for (const CalibrationRecord& rec : records)
    if (rec.dag != dag) Fail(ErrorCode::kInvalidArgument, "predict records must share --dag");
  std::vector<std::string> lines(records.size());
  ParallelFor(records.size(), flags.jobs, [&](std::size_t i) {
    lines[i] = nlohmann::json::parse(predict(records[i].scores)).dump() + "\n";
  });
  std::string content;
  for (const std::string& line : lines) content += line;
  ctx.Emit(content);
  return kExitOk;
}

int CmdEvaluate(const Flags& flags, const Context& ctx) {
  if (flags.tau.empty()) Fail(ErrorCode::kInvalidArgument, "--tau is required");
  const TauHat tau = ParseTau(flags.tau);
  const std::size_t m = SingleM(flags, kDefaultM);
  const ReportFormat format = ParseReportFormat(flags.format);
  const auto dag = LoadDag(flags);
  const auto records = LoadRecords(flags, dag);
  EvalReport report = Evaluate(records, tau, m, MakeOptions(flags, flags.infeasible_is_miss));
  if (!flags.epsilon.empty()) report.config.epsilon = Single(flags.epsilon, "--epsilon");
  if (!flags.delta.empty()) report.config.delta = Single(flags.delta, "--delta");
  if (!flags.guarantee.empty()) report.config.guarantee = ParseGuarantee(flags.guarantee);
  report.config.seed = flags.seed;
  ctx.Emit(EmitReport(std::span(&report, 1), format));
  return kExitOk;
}

int CmdSample(const Flags& flags, const Context& ctx) {
  const auto dag = LoadDag(flags);
  const GeneratorSpec spec = LoadGenerator(flags);
  const auto records = SampleSyntheticRecords(dag, spec, flags.n, flags.seed);
  ctx.Emit(WriteRecords(records, dag));
  return kExitOk;
}

SweepSpec LoadSweep(const Flags& flags) {
  SweepSpec sweep;
  if (!flags.config.empty()) {
    const std::string text = ReadFile(flags.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      Fail(ErrorCode::kParseError, fmt::format("sweep config: {}", e.what()));
    }
    if (!j.is_object()) Fail(ErrorCode::kParseError, "sweep config must be an object");
    try {
      for (const auto& item : j.items()) {
        const std::string& key = item.key();
        const auto& v = item.value();
        if (key == "guarantee")
          sweep.guarantee = ParseGuarantee(v.get<std::string>());
        else if (key == "epsilons")
          sweep.epsilons = v.get<std::vector<double>>();
        else if (key == "deltas")
          sweep.deltas = v.get<std::vector<double>>();
        else if (key == "ms")
          sweep.ms = v.get<std::vector<std::size_t>>();
        else if (key == "n_trials")
          sweep.n_trials = v.get<std::size_t>();
        else if (key == "n_cal")
          sweep.n_cal = v.get<std::size_t>();
        else if (key == "grid")
          sweep.grid = ThresholdGrid::Create(v.get<std::vector<double>>());
        else
          Fail(ErrorCode::kParseError, fmt::format("sweep config: unknown key \"{}\"", key));
      }
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorCode::kParseError, fmt::format("sweep config: {}", e.what()));
    }
  }
  if (!flags.guarantee.empty()) sweep.guarantee = ParseGuarantee(flags.guarantee);
  if (!flags.epsilon.empty()) sweep.epsilons = flags.epsilon;
  if (!flags.delta.empty()) sweep.deltas = flags.delta;
  if (!flags.m.empty()) sweep.ms = flags.m;
  if (flags.n_trials) sweep.n_trials = *flags.n_trials;
  if (flags.n_cal) sweep.n_cal = *flags.n_cal;
  if (!flags.grid.empty()) sweep.grid = ParseGrid(flags.grid);
  sweep.seed = flags.seed;

  for (double eps : sweep.epsilons) GuaranteeSpec::Marginal(eps).Validate();
  if (sweep.guarantee == Guarantee::kPac)
    for (double delta : sweep.deltas) GuaranteeSpec::Pac(0.1, delta).Validate();
  if (sweep.n_cal == 0) Fail(ErrorCode::kInvalidArgument, "n_cal must be positive");
  return sweep;
}

int CmdSweep(const Flags& flags, const Context& ctx) {
  const ReportFormat format = ParseReportFormat(flags.format);
  const SweepSpec sweep = LoadSweep(flags);
  const auto dag = LoadDag(flags);
  const ScoreGenerator gen(dag, LoadGenerator(flags));
  const auto rows = RunSweep(gen, sweep, MakeOptions(flags, flags.infeasible_is_miss));
  ctx.log().info("sweep produced {} rows", rows.size());
  ctx.Emit(EmitReport(rows, format));
  return kExitOk;
}

std::shared_ptr<spdlog::logger> MakeLogger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_st>(err);
  auto log = std::make_shared<spdlog::logger>("csp", sink);
  log->set_pattern("[%l] %v");
  log->set_level(spdlog::level::off);
  if (const char* level = std::getenv("CSP_LOG")) log->set_level(spdlog::level::from_str(level));
  return log;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Flags flags;
  CLI::App app{"Conformal structured prediction over DAGs", "csp"};
  app.require_subcommand(1);

  auto add_out = [&](CLI::App* cmd) { cmd->add_option("--out", flags.out, "Output path"); };
  auto add_jobs = [&](CLI::App* cmd) {
    cmd->add_option("--jobs", flags.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto add_guarantee = [&](CLI::App* cmd, bool lists) {
    cmd->add_option("--guarantee", flags.guarantee, "marginal or pac");
    auto* eps = cmd->add_option("--epsilon", flags.epsilon, "Miscoverage level");
    auto* delta = cmd->add_option("--delta", flags.delta, "PAC failure probability");
    auto* m = cmd->add_option("--m", flags.m, "Maximum number of nodes per set");
    if (lists) {
      eps->delimiter(',');
      delta->delimiter(',');
      m->delimiter(',');
    } else {
      eps->expected(1);
      delta->expected(1);
      m->expected(1);
    }
  };

  CLI::App* build = app.add_subcommand("build-dag", "Build a hierarchy and write DAG JSON");
  build->add_option("--kind", flags.kind, "digit-tree, interval or from-file")->required();
  build->add_option("--k", flags.k, "Digit tree depth");
  build->add_option("--alphabet", flags.alphabet, "Digit alphabet size");
  build->add_option("--lo", flags.lo, "Interval lower bound");
  build->add_option("--hi", flags.hi, "Interval upper bound");
  build->add_option("--input", flags.input, "Edge list or DAG JSON file");
  add_jobs(build);
  add_out(build);

  CLI::App* calibrate = app.add_subcommand("calibrate", "Estimate the threshold");
  calibrate->add_option("--dag", flags.dag, "DAG JSON file");
  calibrate->add_option("--records", flags.records, "Calibration records (JSONL)");
  calibrate->add_option("--config", flags.config, "Calibration config JSON");
  add_guarantee(calibrate, false);
  calibrate->add_option("--grid", flags.grid, "Descending thresholds, comma separated");
  calibrate->add_flag("--infeasible-is-miss", flags.infeasible_is_miss,
                      "Count infeasible records as misses instead of full sets");
  calibrate->add_flag("--strict", flags.strict, "Exit 3 on the full-set fallback");
  add_jobs(calibrate);
  add_out(calibrate);

  CLI::App* predict = app.add_subcommand("predict", "Compute prediction sets");
  predict->add_option("--dag", flags.dag, "DAG JSON file");
  predict->add_option("--scores", flags.scores, "JSON file holding an array of leaf probabilities");
  predict->add_option("--records", flags.records, "Records (JSONL), one set per line");
  predict->add_option("--tau", flags.tau, "Threshold or FULL_SET");
  predict->add_option("--m", flags.m, "Maximum number of nodes per set")->expected(1);
  add_jobs(predict);
  add_out(predict);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Coverage and set size on test records");
  evaluate->add_option("--dag", flags.dag, "DAG JSON file");
  evaluate->add_option("--records", flags.records, "Test records (JSONL)");
  evaluate->add_option("--tau", flags.tau, "Threshold or FULL_SET");
  add_guarantee(evaluate, false);
  evaluate->add_option("--seed", flags.seed, "Recorded in the report");
  evaluate->add_flag("--infeasible-is-miss", flags.infeasible_is_miss,
                      "Count infeasible records as misses instead of full sets");
  evaluate->add_option("--format", flags.format, "csv or json");
  add_jobs(evaluate);
  add_out(evaluate);

  CLI::App* sample = app.add_subcommand("sample", "Draw labeled synthetic records");
  sample->add_option("--dag", flags.dag, "DAG JSON file");
  sample->add_option("--generator", flags.generator, "Family name, JSON file or inline JSON");
  sample->add_option("--n", flags.n, "Number of records")->required();
  sample->add_option("--seed", flags.seed, "Random seed");
  add_jobs(sample);
  add_out(sample);

  CLI::App* sweep = app.add_subcommand("sweep", "Repeated calibration over a hyperparameter grid");
  sweep->add_option("--dag", flags.dag, "DAG JSON file");
  sweep->add_option("--generator", flags.generator, "Family name, JSON file or inline JSON");
  sweep->add_option("--config", flags.config, "Sweep config JSON");
  add_guarantee(sweep, true);
  sweep->add_option("--n-trials", flags.n_trials, "Trials per configuration");
  sweep->add_option("--n-cal", flags.n_cal, "Calibration set size");
  sweep->add_option("--grid", flags.grid, "Descending thresholds, comma separated");
  sweep->add_option("--seed", flags.seed, "Random seed");
  sweep->add_flag("--infeasible-is-miss", flags.infeasible_is_miss,
                      "Count infeasible records as misses instead of full sets");
  sweep->add_option("--format", flags.format, "csv or json");
  add_jobs(sweep);
  add_out(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '\n') c = ' ';
    err << "error: " << ErrorToken(ErrorCode::kInvalidArgument) << ": " << msg << "\n";
    return kExitConfig;
  }

  const Context ctx(flags, out, MakeLogger(err));
  try {
    if (build->parsed()) return CmdBuildDag(flags, ctx);
    if (calibrate->parsed()) return CmdCalibrate(flags, ctx);
    if (predict->parsed()) return CmdPredict(flags, ctx);
    if (evaluate->parsed()) return CmdEvaluate(flags, ctx);
    if (sample->parsed()) return CmdSample(flags, ctx);
    return CmdSweep(flags, ctx);
  } catch (const Error& e) {
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '\n') c = ' ';
    err << "error: " << ErrorToken(e.code()) << ": " << msg << "\n";
    return e.code() == ErrorCode::kInfeasible ? kExitInfeasible : kExitConfig;
  }
}

}  // namespace csp
