#pragma once

#include "cfpred/conformal.hpp"
#include "cfpred/dataset.hpp"
#include "cfpred/feature_map.hpp"
#include "cfpred/solver.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace cfpred {

struct AnalysisOptions {
  int knots = 10;
  int grid_size = 200;
  double margin = 0.25;
  double beta = 0.9;
  BuildOptions feature_map;
  FitOptions base_fit;  // cold start from zero
  ConformalOptions conformal;
};

// Base fit of one exposure group D_z.
struct ExposureModel {
  int exposure = 0;
  Eigen::MatrixXd design;  // n_z x (p+1)
  Eigen::VectorXd outcome;
  SuffStats stats;
  RegWeights lambda;
  FitResult fit;
};

struct ExposureAnalysis {
  int exposure = 0;
  std::int64_t label = 0;
  int n = 0;
  WeightVector weights;
  double mean = 0.0;  // phi~(x)' w of the base fit
  ConformalScores scores;
  double point = 0.0;
};

// Feature map, shared grid and per-exposure base fits learned once from D;
// units are then analyzed against it.
class CounterfactualModel {
 public:
  CounterfactualModel(const Dataset& data, const AnalysisOptions& options);

  const FeatureMapSpec& spec() const { return spec_; }
  const OutcomeGrid& grid() const { return grid_; }
  const std::vector<ExposureModel>& exposures() const { return models_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const AnalysisOptions& options() const { return options_; }
  int exposure_count() const { return static_cast<int>(models_.size()); }

  ExposureAnalysis analyze(int exposure, const Eigen::Ref<const Eigen::VectorXd>& x) const;
  std::vector<ExposureAnalysis> analyze_all(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  AnalysisOptions options_;
  Schema schema_;
  FeatureMapSpec spec_;
  OutcomeGrid grid_;
  std::vector<ExposureModel> models_;
  std::vector<std::int64_t> labels_;
  std::vector<std::string> warnings_;
};

// One feature map from pooled data, one fit and score curve per exposure on
// the shared grid.
std::vector<ExposureAnalysis> analyze_unit(const Dataset& data,
                                           const Eigen::Ref<const Eigen::VectorXd>& x,
                                           const AnalysisOptions& options);

// Largest beta at which the two prediction sets are disjoint on the shared
// grid: min over y' of max(b_g(y'), b_h(y')), clipped to [0, 1].
double confidence(const ConformalScores& g, const ConformalScores& h);

struct ConfidenceTable {
  std::vector<std::int64_t> exposures;
  // confidence(g, h) for g > h; NaN on and above the diagonal.
  Eigen::MatrixXd confidence;
  // point_g - point_h.
  Eigen::MatrixXd effects;
};

ConfidenceTable pairwise_table(const std::vector<ExposureAnalysis>& analyses);

}  // namespace cfpred
