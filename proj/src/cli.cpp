#include "cfpred/cli.hpp"

#include "cfpred/counterfactual.hpp"
#include "cfpred/experiments.hpp"
#include "cfpred/io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

namespace cfpred {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInvalid = 2;

struct SynthArgs {
  std::string experiment;
  int n = 0;
  std::uint64_t seed = 1;
  std::string out;
  std::string schema_out;
  int d = 200;
  int rank = 150;
};

struct AnalyzeArgs {
  std::string data;
  std::string schema;
  std::string unit;
  double beta = 0.9;
  int knots = 10;
  int grid_size = 200;
  double margin = 0.25;
  std::string out;
  std::string scores_csv;
  bool literal_cap = false;
};

struct CoverageArgs {
  std::string experiment;
  int runs = 1000;
  double beta = 0.9;
  std::uint64_t seed = 1;
  int threads = 1;
  std::optional<int> n;
  std::optional<int> d;
  std::optional<int> rank;
  std::optional<int> knots;
  int grid_size = 200;
  double margin = 0.25;
  bool fixed_covariance = false;
  std::string json_out;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write '" + path + "'");
  return f;
}

int run_synth(const SynthArgs& a, std::ostream& out) {
  const Experiment e = parse_experiment(a.experiment);
  const int n = a.n > 0 ? a.n : CoverageConfig::defaults(e).n;
  const SyntheticSample s =
      e == Experiment::nonlinear ? gen_nonlinear(n, a.seed) : gen_highdim(n, a.d, a.rank, a.seed);
  save_csv(a.out, s.data);
  if (!a.schema_out.empty()) {
    open_output(a.schema_out) << schema_to_json(s.data.schema).dump(2) << '\n';
  }
  out << "wrote " << s.data.size() << " rows to " << a.out << '\n';
  return kExitOk;
}

int run_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  if (!(a.beta > 0.0 && a.beta < 1.0)) throw ValidationError("--beta must be in (0, 1)");
  std::optional<Schema> schema;
  if (!a.schema.empty()) schema = load_schema(a.schema);
  const Dataset data = load_csv(a.data, schema);

  nlohmann::json unit_doc;
  try {
    unit_doc = nlohmann::json::parse(a.unit);
  } catch (const nlohmann::json::parse_error&) {
    std::ifstream f(a.unit);
    if (!f) throw ValidationError("--unit is neither a JSON object nor a readable file");
    try {
      f >> unit_doc;
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("unit file '" + a.unit + "': " + e.what());
    }
  }

  AnalysisReport report;
  report.beta = a.beta;
  const Eigen::VectorXd x = parse_unit(unit_doc, data.schema, &report.warnings);

  AnalysisOptions options;
  options.knots = a.knots;
  options.grid_size = a.grid_size;
  options.margin = a.margin;
  options.beta = a.beta;
  options.feature_map.cap_mode = a.literal_cap ? CapMode::literal : CapMode::continuous;
  const CounterfactualModel model(data, options);
  report.model = &model;
  report.analyses = model.analyze_all(x);
  report.warnings.insert(report.warnings.end(), model.warnings().begin(), model.warnings().end());
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';

  const std::string doc = analysis_to_json(report).dump(2);
  if (a.out.empty()) {
    out << doc << '\n';
  } else {
    open_output(a.out) << doc << '\n';
    for (const auto& an : report.analyses) {
      const PredictionSet set = prediction_set(an.scores, a.beta);
      out << "exposure " << an.label << ": n=" << an.n << " point=" << an.point << " intervals=";
      for (const auto& [lo, hi] : set.intervals) out << '[' << lo << ", " << hi << ']';
      out << '\n';
    }
    if (report.analyses.size() >= 2) print_confidence_table(out, pairwise_table(report.analyses));
  }
  if (!a.scores_csv.empty()) {
    auto f = open_output(a.scores_csv);
    write_analysis_scores_csv(f, report.analyses);
  }
  return kExitOk;
}

int run_coverage(const CoverageArgs& a, std::ostream& out) {
  CoverageConfig config = CoverageConfig::defaults(parse_experiment(a.experiment));
  config.runs = a.runs;
  config.beta = a.beta;
  config.seed = a.seed;
  config.threads = a.threads;
  if (const char* env = std::getenv("CF_THREADS"); env != nullptr && *env != '\0') {
    try {
      config.threads = std::stoi(env);
    } catch (const std::exception&) {
      throw ValidationError("CF_THREADS must be an integer");
    }
  }
  if (config.threads < 1) throw ValidationError("thread count must be at least 1");
  if (a.n) config.n = *a.n;
  if (a.d) config.d = *a.d;
  if (a.rank) config.rank = *a.rank;
  if (a.knots) config.knots = *a.knots;
  config.grid_size = a.grid_size;
  config.margin = a.margin;
  config.fixed_covariance = a.fixed_covariance;

  const CoverageReport report = coverage_run(config);
  print_coverage(out, report);
  if (!a.json_out.empty()) open_output(a.json_out) << coverage_to_json(report).dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Counterfactual prediction intervals with sparse additive predictors"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset as CSV");
  synth_cmd->add_option("--experiment", synth.experiment, "nonlinear or highdim")->required();
  synth_cmd->add_option("--n", synth.n, "number of units (default per experiment)");
  synth_cmd->add_option("--seed", synth.seed, "random seed");
  synth_cmd->add_option("--out", synth.out, "output CSV path")->required();
  synth_cmd->add_option("--d", synth.d, "covariate dimension (highdim)");
  synth_cmd->add_option("--rank", synth.rank, "covariance rank (highdim)");
  synth_cmd->add_option("--schema-out", synth.schema_out, "also write the schema JSON here");

  AnalyzeArgs analyze;
  auto* analyze_cmd =
      app.add_subcommand("analyze", "prediction intervals and counterfactual confidence for a unit");
  analyze_cmd->add_option("--data", analyze.data, "CSV with exposure,outcome,covariates")
      ->required();
  analyze_cmd->add_option("--schema", analyze.schema, "schema JSON (inferred when omitted)");
  analyze_cmd->add_option("--unit", analyze.unit, "unit covariates: JSON object or file")
      ->required();
  analyze_cmd->add_option("--beta", analyze.beta, "target coverage");
  analyze_cmd->add_option("--knots", analyze.knots, "knots per continuous covariate");
  analyze_cmd->add_option("--grid-size", analyze.grid_size, "outcome grid points");
  analyze_cmd->add_option("--margin", analyze.margin, "grid margin as a fraction of the range");
  analyze_cmd->add_option("--out", analyze.out, "analysis JSON path (stdout when omitted)");
  analyze_cmd->add_option("--scores-csv", analyze.scores_csv, "write score curves as CSV");
  analyze_cmd->add_flag("--literal-cap", analyze.literal_cap,
                        "last hinge jumps to the cap value beyond the data range");

  CoverageArgs coverage;
  auto* coverage_cmd = app.add_subcommand("coverage", "Monte Carlo coverage of the intervals");
  coverage_cmd->add_option("--experiment", coverage.experiment, "nonlinear or highdim")
      ->required();
  coverage_cmd->add_option("--runs", coverage.runs, "Monte Carlo replicates");
  coverage_cmd->add_option("--beta", coverage.beta, "target coverage");
  coverage_cmd->add_option("--seed", coverage.seed, "base seed");
  coverage_cmd->add_option("--threads", coverage.threads, "worker threads (CF_THREADS overrides)");
  coverage_cmd->add_option("--n", coverage.n, "units per replicate");
  coverage_cmd->add_option("--d", coverage.d, "covariate dimension (highdim)");
  coverage_cmd->add_option("--rank", coverage.rank, "covariance rank (highdim)");
  coverage_cmd->add_option("--knots", coverage.knots, "knots per continuous covariate");
  coverage_cmd->add_option("--grid-size", coverage.grid_size, "outcome grid points");
  coverage_cmd->add_option("--margin", coverage.margin, "grid margin");
  coverage_cmd->add_flag("--fixed-covariance", coverage.fixed_covariance,
                         "draw highdim covariances once for all replicates");
  coverage_cmd->add_option("--json", coverage.json_out, "also write the report as JSON");

  std::vector<const char*> argv;
  argv.push_back("cfpred");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth, out);
    if (analyze_cmd->parsed()) return run_analyze(analyze, out, err);
    if (coverage_cmd->parsed()) return run_coverage(coverage, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace cfpred
