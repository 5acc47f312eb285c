#include "cfpred/conformal.hpp"

#include "cfpred/format.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace cfpred {

double OutcomeGrid::step() const {
  if (points.size() < 2) return 0.0;
  return (hi - lo) / static_cast<double>(points.size() - 1);
}

std::size_t OutcomeGrid::nearest(double y) const {
  if (points.empty()) throw std::logic_error("empty outcome grid");
  const auto it = std::lower_bound(points.begin(), points.end(), y);
  if (it == points.begin()) return 0;
  if (it == points.end()) return points.size() - 1;
  const auto k = static_cast<std::size_t>(it - points.begin());
  return (y - points[k - 1] <= points[k] - y) ? k - 1 : k;
}

OutcomeGrid make_grid(std::span<const double> outcomes, int size, double margin) {
  if (outcomes.empty()) throw ValidationError("cannot build an outcome grid from empty data");
  if (size < 2) throw ValidationError("grid size must be at least 2");
  if (!(margin >= 0.0)) throw ValidationError("grid margin must be nonnegative");
  const auto [mn, mx] = std::minmax_element(outcomes.begin(), outcomes.end());
  const double range = *mx - *mn;
  OutcomeGrid grid;
  if (range > 0.0) {
    grid.lo = *mn - margin * range;
    grid.hi = *mx + margin * range;
  } else {
    grid.lo = *mn - 1.0;
    grid.hi = *mx + 1.0;
  }
  grid.points.resize(static_cast<std::size_t>(size));
  const double step = (grid.hi - grid.lo) / (size - 1);
  for (int k = 0; k < size; ++k) grid.points[k] = grid.lo + k * step;
  grid.points.back() = grid.hi;
  return grid;
}

OutcomeGrid make_grid(const Dataset& data, int size, double margin) {
  return make_grid(std::span<const double>(data.outcome.data(), data.outcome.size()), size,
                   margin);
}

int conformity_rank(std::span<const double> residuals, double trial_residual) {
  int count = 1;
  for (double r : residuals) {
    if (r <= trial_residual) ++count;
  }
  return count;
}

ConformalScores conformal_scores(const SuffStats& base_stats, const WeightVector& base_w,
                                 const Eigen::Ref<const Eigen::MatrixXd>& design,
                                 const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const Eigen::Ref<const Eigen::VectorXd>& x_phi,
                                 const OutcomeGrid& grid, const ConformalOptions& options) {
  const Eigen::Index dim = base_stats.dim();
  if (x_phi.size() != dim || base_w.size() != dim || design.cols() != dim) {
    throw std::invalid_argument("conformal inputs have mismatched regressor dimensions");
  }
  if (design.rows() != y.size() || design.rows() != base_stats.n) {
    throw std::invalid_argument("conformal dataset does not match its statistics");
  }

  ConformalScores scores;
  scores.grid = grid;
  scores.n = static_cast<int>(base_stats.n);
  scores.rank.resize(grid.size());
  scores.prediction_at.resize(grid.size());

  // (x, y') enters the Gram matrix and the penalty weights the same way for every y'.
  SuffStats augmented = base_stats;
  augmented.add(x_phi, 0.0);
  const RegWeights lambda = spice_weights(augmented);
  const Eigen::VectorXd base_cross = augmented.cross;
  const double base_energy = augmented.energy;

  std::vector<double> residuals(static_cast<std::size_t>(y.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double trial = grid.points[k];
    augmented.cross = base_cross + x_phi * trial;
    augmented.energy = base_energy + trial * trial;
    const FitResult refit = fit(augmented, lambda, base_w, options.refit);

    const Eigen::VectorXd fitted = design * refit.w;
    for (Eigen::Index i = 0; i < y.size(); ++i) residuals[i] = std::abs(y(i) - fitted(i));
    const double at_x = predict_mean(refit.w, x_phi);
    scores.prediction_at[k] = at_x;
    scores.rank[k] = conformity_rank(residuals, std::abs(trial - at_x));
  }
  return scores;
}

int rank_threshold(double beta, int n) {
  const double scaled = beta * (n + 1);
  return static_cast<int>(std::ceil(scaled - 1e-9 * std::max(1.0, scaled)));
}

double PredictionSet::width() const {
  double total = 0.0;
  for (const auto& [lo, hi] : intervals) total += hi - lo;
  return total;
}

PredictionSet prediction_set(const ConformalScores& scores, double beta) {
  PredictionSet set;
  set.beta = beta;
  const int threshold = rank_threshold(beta, scores.n);
  const auto& points = scores.grid.points;
  set.included.resize(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    set.included[k] = scores.rank[k] <= threshold;
  }
  for (std::size_t k = 0; k < points.size();) {
    if (!set.included[k]) {
      ++k;
      continue;
    }
    std::size_t end = k;
    while (end + 1 < points.size() && set.included[end + 1]) ++end;
    set.intervals.emplace_back(points[k], points[end]);
    k = end + 1;
  }
  set.point = point_prediction(scores);
  return set;
}

bool covers(const PredictionSet& set, const OutcomeGrid& grid, double y) {
  if (y < grid.lo - 0.5 * grid.step() || y > grid.hi + 0.5 * grid.step()) return false;
  return set.included[grid.nearest(y)];
}

double point_prediction(const ConformalScores& scores) {
  if (scores.rank.empty()) throw std::invalid_argument("empty score curve");
  const auto first = std::min_element(scores.rank.begin(), scores.rank.end());
  const auto start = static_cast<std::size_t>(first - scores.rank.begin());
  std::size_t end = start;
  while (end + 1 < scores.rank.size() && scores.rank[end + 1] == *first) ++end;
  return 0.5 * (scores.grid.points[start] + scores.grid.points[end]);
}

std::vector<double> min_beta_curve(const ConformalScores& scores) {
  std::vector<double> b(scores.rank.size());
  const double denom = scores.n + 1;
  for (std::size_t k = 0; k < b.size(); ++k) {
    b[k] = std::clamp((scores.rank[k] - 1) / denom, 0.0, 1.0);
  }
  return b;
}

void write_scores_csv(std::ostream& out, const ConformalScores& scores) {
  out << "y_grid,pi,prediction_at\n";
  for (std::size_t k = 0; k < scores.grid.size(); ++k) {
    out << format_number(scores.grid.points[k]) << ',' << format_number(scores.pi(k)) << ','
        << format_number(scores.prediction_at[k]) << '\n';
  }
}

}  // namespace cfpred
