#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace cfpred {

// Coefficients (w_0, w_1, ..., w_p); w_0 is the intercept.
using WeightVector = Eigen::VectorXd;
// Per-coefficient penalty levels; entry 0 (intercept) is always zero.
using RegWeights = Eigen::VectorXd;

// Everything the solver sees of a dataset: sums over samples of
// phi~ phi~^T, phi~ y and y^2, where phi~ = (1, phi(x)).
struct SuffStats {
  Eigen::MatrixXd gram;
  Eigen::VectorXd cross;
  double energy = 0.0;
  std::int64_t n = 0;

  static SuffStats empty(Eigen::Index dim);
  // Builds from rows of an intercept-augmented design matrix.
  static SuffStats from_design(const Eigen::Ref<const Eigen::MatrixXd>& design,
                               const Eigen::Ref<const Eigen::VectorXd>& y);

  Eigen::Index dim() const { return cross.size(); }

  // Rank-one update, O(p^2).
  void add(const Eigen::Ref<const Eigen::VectorXd>& phi, double y);
  // Exact algebraic inverse of add. Throws std::logic_error when n == 0.
  void remove(const Eigen::Ref<const Eigen::VectorXd>& phi, double y);
};

SuffStats stats_add(SuffStats stats, const Eigen::Ref<const Eigen::VectorXd>& phi, double y);
SuffStats stats_remove(SuffStats stats, const Eigen::Ref<const Eigen::VectorXd>& phi, double y);

// lambda_j = sqrt(gram_jj) / n for j >= 1, lambda_0 = 0.
RegWeights spice_weights(const SuffStats& stats);

// sqrt(mean squared residual) + sum_j lambda_j |w_j|.
double cost(const SuffStats& stats, const RegWeights& lambda, const WeightVector& w);

// Exact minimizer over w of sqrt((c - 2 beta w + alpha w^2)/n) + lambda |w|.
//
// Zero when |beta| <= lambda sqrt(n c). Otherwise, squaring the stationarity
// condition (alpha w - beta) = -sign(beta) lambda sqrt(n g(w)) and using
// g(w) = ((alpha w - beta)^2 + alpha c - beta^2) / alpha gives
//
//   w = sign(beta) (|beta| - lambda sqrt(n (alpha c - beta^2) / (alpha - n lambda^2))) / alpha.
//
// alpha <= 0 (an all-zero column) returns 0.
double coordinate_update(double alpha, double beta, double c, double lambda, double n);

struct FitOptions {
  double tol = 1e-8;
  int max_sweeps = 1000;
  bool record_history = false;
};

struct FitResult {
  WeightVector w;
  double cost = 0.0;
  int sweeps = 0;
  bool converged = false;
  // Cost before the first sweep followed by the cost after each sweep.
  std::vector<double> history;
};

// Cyclic coordinate descent (intercept first) on the square-root lasso.
// Stops once a sweep lowers the cost by less than tol (relative) and moves no
// fitted value by more than tol times the outcome RMS, or after max_sweeps.
FitResult fit(const SuffStats& stats, const RegWeights& lambda, const WeightVector& w_init,
              const FitOptions& options = {});

// phi~(x)^T w.
double predict_mean(const WeightVector& w, const Eigen::Ref<const Eigen::VectorXd>& phi);

}  // namespace cfpred
