#pragma once

#include "cfpred/dataset.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cfpred {

// Returns the ceil(q*n)-th order statistic of `values` (the minimum for q = 0).
// Throws std::invalid_argument("empty sample") on empty input.
double empirical_quantile(std::span<const double> values, double q);

// Natural upper limit on the knot count: max(round((n - d')/d''), 1).
// Returns nullopt (unbounded) when there are no continuous covariates.
std::optional<int> knot_cap(int n, int d_prime, int d_dprime);

enum class CapMode {
  continuous,  // last hinge frozen at c_{m+1} - c_m beyond the data range
  literal,     // last hinge jumps to c_{m+1} beyond the data range
};

// Encoding plan for one covariate column.
struct ColumnPlan {
  ColumnSchema column;
  // Continuous only: distinct hinge knots c_1 < ... < c_m' and the cap c_{m+1}.
  std::vector<double> knots;
  double cap = 0.0;
  // Position of the first regressor for this column (0-based, intercept excluded).
  int offset = 0;
  int width = 0;
};

struct FeatureMapSpec {
  std::vector<ColumnPlan> columns;
  int knots_requested = 1;  // m
  int p = 0;                // regressor count, intercept excluded
  CapMode cap_mode = CapMode::continuous;
};

struct BuildOptions {
  CapMode cap_mode = CapMode::continuous;
};

// Knots are placed at empirical quantiles (k-1)/m of the pooled covariate
// column, k = 1..m, with the column maximum as c_{m+1}. Tied knots are
// collapsed and an all-zero last hinge (c_m == c_{m+1}) is dropped.
// A requested m above knot_cap appends a message to `warnings` if given.
FeatureMapSpec build_spec(const Dataset& data, int m, const BuildOptions& options = {},
                          std::vector<std::string>* warnings = nullptr);

// Regressor vector phi(x) without the intercept; length spec.p.
Eigen::VectorXd encode(const FeatureMapSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x);

// Intercept-augmented regressor vector (1, phi(x)); length spec.p + 1.
Eigen::VectorXd encode_with_intercept(const FeatureMapSpec& spec,
                                      const Eigen::Ref<const Eigen::VectorXd>& x);

// Rows of (1, phi(x_i)) for every unit of `data`; n x (p + 1).
Eigen::MatrixXd design_matrix(const FeatureMapSpec& spec, const Dataset& data);

}  // namespace cfpred
