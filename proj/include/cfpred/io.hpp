#pragma once

#include "cfpred/counterfactual.hpp"
#include "cfpred/dataset.hpp"
#include "cfpred/experiments.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cfpred {

// {"columns":[{"name":"x1","type":"continuous"},
//             {"name":"x2","type":"categorical","categories":3}, ...]}
Schema parse_schema(const nlohmann::json& doc);
nlohmann::json schema_to_json(const Schema& schema);
Schema load_schema(const std::string& path);

// Reads `exposure,outcome,<covariates...>`. Covariates are matched to the
// schema by name; without a schema, 0/1-valued columns are taken as binary and
// everything else as continuous. Exposure labels are re-indexed to 0..K-1 in
// increasing order (Dataset::exposure_labels keeps the originals).
Dataset read_csv(std::istream& in, const std::optional<Schema>& schema,
                 const std::string& source = "<stream>");
Dataset load_csv(const std::string& path, const std::optional<Schema>& schema);

// Writes the canonical CSV; numbers use the shortest round-trip form.
void write_csv(std::ostream& out, const Dataset& data);
void save_csv(const std::string& path, const Dataset& data);

// Unit covariates from an object keyed by column name. "__all__" sets every
// column not named explicitly. Missing binary/categorical columns default to 0
// with a warning; a missing continuous column is an error.
Eigen::VectorXd parse_unit(const nlohmann::json& unit, const Schema& schema,
                           std::vector<std::string>* warnings = nullptr);

nlohmann::json weights_to_json(const WeightVector& w);
nlohmann::json knots_to_json(const FeatureMapSpec& spec);

struct AnalysisReport {
  const CounterfactualModel* model = nullptr;
  std::vector<ExposureAnalysis> analyses;
  double beta = 0.9;
  std::vector<std::string> warnings;
};

nlohmann::json analysis_to_json(const AnalysisReport& report);
// Human-readable confidence table, percentages rounded to integers.
void print_confidence_table(std::ostream& out, const ConfidenceTable& table);
// One row per (exposure, grid point): exposure,y_grid,pi,prediction_at.
void write_analysis_scores_csv(std::ostream& out, const std::vector<ExposureAnalysis>& analyses);

nlohmann::json coverage_to_json(const CoverageReport& report);
void print_coverage(std::ostream& out, const CoverageReport& report);

}  // namespace cfpred
