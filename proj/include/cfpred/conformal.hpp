#pragma once

#include "cfpred/dataset.hpp"
#include "cfpred/solver.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cfpred {

// Candidate outcomes y' shared by every exposure of one analysis.
struct OutcomeGrid {
  std::vector<double> points;  // strictly increasing
  double lo = 0.0;
  double hi = 0.0;

  std::size_t size() const { return points.size(); }
  double step() const;
  // Index of the grid point nearest to y.
  std::size_t nearest(double y) const;
};

// `size` equally spaced points over [min - margin*R, max + margin*R] of the
// given outcomes; a zero range R widens to [y - 1, y + 1].
OutcomeGrid make_grid(std::span<const double> outcomes, int size, double margin);
OutcomeGrid make_grid(const Dataset& data, int size, double margin);

// Conformity ranks over a grid. rank[k] = (n+1) pi(y'_k), an integer in
// 1..n+1: one plus the number of fitted residuals no larger than the trial
// point's own residual.
struct ConformalScores {
  OutcomeGrid grid;
  std::vector<int> rank;
  int n = 0;
  std::vector<double> prediction_at;  // phi~(x)' w(y'_k), diagnostic

  double pi(std::size_t k) const { return rank[k] / static_cast<double>(n + 1); }
};

struct ConformalOptions {
  // Warm-started refits per grid point.
  FitOptions refit{1e-8, 50, false};
};

// The augmented fit for each grid point reuses the (x, y')-independent part of
// the statistics: the Gram matrix and penalty weights are built once, and only
// the cross moments and energy change with y'.
ConformalScores conformal_scores(const SuffStats& base_stats, const WeightVector& base_w,
                                 const Eigen::Ref<const Eigen::MatrixXd>& design,
                                 const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const Eigen::Ref<const Eigen::VectorXd>& x_phi,
                                 const OutcomeGrid& grid, const ConformalOptions& options = {});

// Rank counting for one fitted model: (1 + #{i : r_i <= trial}).
int conformity_rank(std::span<const double> residuals, double trial_residual);

// ceil(beta (n+1)), robust to rounding in the product.
int rank_threshold(double beta, int n);

struct PredictionSet {
  double beta = 0.0;
  std::vector<bool> included;
  std::vector<std::pair<double, double>> intervals;  // maximal runs of included grid points
  double point = 0.0;

  bool empty() const { return intervals.empty(); }
  // Total length of the included runs.
  double width() const;
};

// Grid points with (n+1) pi(y') <= ceil(beta (n+1)).
PredictionSet prediction_set(const ConformalScores& scores, double beta);

// Whether y is in the set, judged by its nearest grid point.
bool covers(const PredictionSet& set, const OutcomeGrid& grid, double y);

// Midpoint of the run of minimizers of pi containing the first global minimizer.
double point_prediction(const ConformalScores& scores);

// b(y') = pi(y') - 1/(n+1): y' enters the prediction set exactly when beta > b(y').
std::vector<double> min_beta_curve(const ConformalScores& scores);

// CSV with columns y_grid,pi,prediction_at.
void write_scores_csv(std::ostream& out, const ConformalScores& scores);

}  // namespace cfpred
