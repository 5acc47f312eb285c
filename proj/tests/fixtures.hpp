#pragma once

#include "cfpred/dataset.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <random>

#include <string>
#include <vector>

namespace cfpred::testing {

// Dataset with the given exposures, outcomes and covariate rows; labels 0..K-1.
inline Dataset make_dataset(Schema schema, std::vector<int> exposure,
                            const std::vector<double>& outcome,
                            const std::vector<std::vector<double>>& rows) {
  Dataset d;
  d.schema = std::move(schema);
  d.exposure = std::move(exposure);
  d.outcome = Eigen::Map<const Eigen::VectorXd>(outcome.data(),
                                                static_cast<Eigen::Index>(outcome.size()));
  d.covariates.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(d.schema.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      d.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  int k = 0;
  for (int z : d.exposure) k = std::max(k, z + 1);
  for (int z = 0; z < k; ++z) d.exposure_labels.push_back(z);
  return d;
}

// One continuous column x holding `values`, every row in exposure 0.
inline Dataset single_column(const std::vector<double>& values) {
  std::vector<std::vector<double>> rows;
  for (double v : values) rows.push_back({v});
  return make_dataset({ColumnSchema::continuous("x")}, std::vector<int>(values.size(), 0),
                      std::vector<double>(values.size(), 0.0), rows);
}

// Stand-in for a survey-style dataset: 26 binary covariates, three exposures
// with original labels 1, 2, 3, and an outcome driven by a handful of the
// binaries plus an exposure shift.
inline Dataset binary_standin(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.4);
  std::uniform_int_distribution<int> exposure(0, 2);
  std::normal_distribution<double> noise(0.0, 1.0);
  Schema schema;
  for (int j = 1; j <= 26; ++j) schema.push_back(ColumnSchema::binary("b" + std::to_string(j)));
  Dataset d;
  d.schema = schema;
  d.exposure.resize(n);
  d.outcome.resize(n);
  d.covariates.resize(n, 26);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 26; ++j) d.covariates(i, j) = coin(rng) ? 1.0 : 0.0;
    const int z = exposure(rng);
    d.exposure[i] = z;
    d.outcome(i) = 10.0 + 1.5 * z + 2.0 * d.covariates(i, 0) - 1.0 * d.covariates(i, 4) +
                   0.5 * z * d.covariates(i, 7) + noise(rng);
  }
  d.exposure_labels = {1, 2, 3};
  return d;
}

}  // namespace cfpred::testing
