#include "cfpred/counterfactual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfpred {

CounterfactualModel::CounterfactualModel(const Dataset& data, const AnalysisOptions& options)
    : options_(options) {
  validate(data);
  spec_ = build_spec(data, options.knots, options.feature_map, &warnings_);
  grid_ = make_grid(data, options.grid_size, options.margin);
  labels_ = data.exposure_labels;
  schema_ = data.schema;

  const auto groups = split_by_exposure(data);
  models_.reserve(groups.size());
  for (std::size_t z = 0; z < groups.size(); ++z) {
    ExposureModel m;
    m.exposure = static_cast<int>(z);
    m.design = design_matrix(spec_, groups[z]);
    m.outcome = groups[z].outcome;
    m.stats = SuffStats::from_design(m.design, m.outcome);
    m.lambda = spice_weights(m.stats);
    m.fit = fit(m.stats, m.lambda, WeightVector::Zero(m.stats.dim()), options.base_fit);
    if (!m.fit.converged) {
      warnings_.push_back("base fit for exposure " + std::to_string(labels_[z]) +
                          " stopped after " + std::to_string(m.fit.sweeps) +
                          " sweeps without converging");
    }
    models_.push_back(std::move(m));
  }
}

ExposureAnalysis CounterfactualModel::analyze(int exposure,
                                              const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (exposure < 0 || exposure >= exposure_count()) {
    throw std::out_of_range("exposure index out of range");
  }
  validate_row(schema_, x, "unit");

  const auto& m = models_[exposure];
  const Eigen::VectorXd phi = encode_with_intercept(spec_, x);

  ExposureAnalysis a;
  a.exposure = exposure;
  a.label = labels_[exposure];
  a.n = static_cast<int>(m.stats.n);
  a.weights = m.fit.w;
  a.mean = predict_mean(m.fit.w, phi);
  a.scores = conformal_scores(m.stats, m.fit.w, m.design, m.outcome, phi, grid_,
                              options_.conformal);
  a.point = point_prediction(a.scores);
  return a;
}

std::vector<ExposureAnalysis> CounterfactualModel::analyze_all(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  std::vector<ExposureAnalysis> out;
  out.reserve(models_.size());
  for (int z = 0; z < exposure_count(); ++z) out.push_back(analyze(z, x));
  return out;
}

std::vector<ExposureAnalysis> analyze_unit(const Dataset& data,
                                           const Eigen::Ref<const Eigen::VectorXd>& x,
                                           const AnalysisOptions& options) {
  return CounterfactualModel(data, options).analyze_all(x);
}

double confidence(const ConformalScores& g, const ConformalScores& h) {
  if (g.grid.points != h.grid.points) {
    throw std::invalid_argument("confidence requires score curves on the same grid");
  }
  const auto bg = min_beta_curve(g);
  const auto bh = min_beta_curve(h);
  double best = 1.0;
  for (std::size_t k = 0; k < bg.size(); ++k) best = std::min(best, std::max(bg[k], bh[k]));
  return std::clamp(best, 0.0, 1.0);
}

ConfidenceTable pairwise_table(const std::vector<ExposureAnalysis>& analyses) {
  const auto k = static_cast<Eigen::Index>(analyses.size());
  if (k < 2) throw std::invalid_argument("a confidence table needs at least two exposures");
  ConfidenceTable table;
  table.confidence =
      Eigen::MatrixXd::Constant(k, k, std::numeric_limits<double>::quiet_NaN());
  table.effects = Eigen::MatrixXd::Zero(k, k);
  for (const auto& a : analyses) table.exposures.push_back(a.label);
  for (Eigen::Index g = 0; g < k; ++g) {
    for (Eigen::Index h = 0; h < k; ++h) {
      table.effects(g, h) = analyses[g].point - analyses[h].point;
      if (g > h) table.confidence(g, h) = confidence(analyses[g].scores, analyses[h].scores);
    }
  }
  return table;
}

}  // namespace cfpred
