#pragma once

#include "cfpred/counterfactual.hpp"
#include "cfpred/dataset.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace cfpred {

using Rng = std::mt19937_64;

// Independent stream for (seed, stream index); results never depend on the
// order in which streams are consumed.
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

// A simulated unit with both potential outcomes. y0/y1 are for evaluation
// only; fitting sees the Dataset, which does not carry them.
struct SyntheticUnit {
  Eigen::VectorXd x;
  int z = 0;
  double y = 0.0;
  double y0 = 0.0;
  double y1 = 0.0;
};

struct SyntheticSample {
  Dataset data;
  std::vector<SyntheticUnit> units;
};

// Scalar covariate, equal assignment probabilities:
//   x | z=0 ~ N(40, 10^2),  x | z=1 ~ N(20, 10^2)
//   y(0) | x ~ N(72 + 3 sqrt|x|, 1),  y(1) | x ~ N(90 + exp(0.06 x), 1)
struct NonlinearModel {
  static double mean(int z, double x);
  static SyntheticUnit draw(Rng& rng);
  static SyntheticUnit draw_given(int z, Rng& rng);
};

// d Gaussian covariates with random unit-trace, rank-deficient covariances
// Sigma_z = A A' / tr(A A') (A is d x rank standard Gaussian), P(z=1) = 0.4:
//   y(0) | x ~ N(x_1 + 5 x_10 + 5 x_20 + 0.5, 0.5^2)
//   y(1) | x ~ N(x_1 + x_10 - x_30, 0.5^2)
class HighDimModel {
 public:
  static constexpr double kExposureOneProbability = 0.4;
  static constexpr double kNoiseSd = 0.5;

  HighDimModel(int d, int rank, Rng& rng);

  int dimension() const { return d_; }
  int rank() const { return rank_; }
  Eigen::MatrixXd covariance(int z) const;

  static double mean(int z, const Eigen::Ref<const Eigen::VectorXd>& x);
  SyntheticUnit draw(Rng& rng) const;
  SyntheticUnit draw_given(int z, Rng& rng) const;

 private:
  int d_;
  int rank_;
  // Scaled factors: Sigma_z = factor_z factor_z'.
  std::array<Eigen::MatrixXd, 2> factor_;
};

// Assembles a Dataset (exposures 0/1, covariates x1..xd, all continuous).
SyntheticSample assemble(std::vector<SyntheticUnit> units);

SyntheticSample gen_nonlinear(int n, std::uint64_t seed);
SyntheticSample gen_highdim(int n, int d, int rank, std::uint64_t seed);

enum class Experiment { nonlinear, highdim };

Experiment parse_experiment(const std::string& name);
std::string to_string(Experiment e);

struct CoverageConfig {
  Experiment experiment = Experiment::nonlinear;
  int runs = 1000;
  double beta = 0.9;
  std::uint64_t seed = 1;
  int n = 120;
  int d = 200;
  int rank = 150;
  int knots = 10;
  int grid_size = 200;
  double margin = 0.25;
  // Draw the high-dimensional covariances once instead of per replicate.
  bool fixed_covariance = false;
  int threads = 1;
  ConformalOptions conformal;

  // Harness defaults per experiment (n, knots).
  static CoverageConfig defaults(Experiment e);
};

struct CoverageReport {
  Experiment experiment = Experiment::nonlinear;
  double beta = 0.0;
  int runs = 0;
  std::uint64_t seed = 0;
  std::array<int, 2> covered{0, 0};
  std::array<double, 2> coverage{0.0, 0.0};
  std::array<double, 2> mean_width{0.0, 0.0};
};

// Per replicate r: fresh D from stream (seed, r), a fit per exposure, one fresh
// unit per exposure drawn from that exposure's covariate law, and a check of
// y(z) against C_{z,beta}(x).
CoverageReport coverage_run(const CoverageConfig& config);

}  // namespace cfpred
