#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfpred {

// Raised for malformed user input (bad files, out-of-range codes, bad
// arguments). The CLI maps it to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ColumnKind { binary, categorical, continuous };

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  // Number of categories; 2 for binary, unused for continuous.
  int categories = 0;

  static ColumnSchema binary(std::string name) {
    return {std::move(name), ColumnKind::binary, 2};
  }
  static ColumnSchema categorical(std::string name, int k);
  static ColumnSchema continuous(std::string name) {
    return {std::move(name), ColumnKind::continuous, 0};
  }
};

using Schema = std::vector<ColumnSchema>;

// Observational data D: one row per unit with its exposure label, outcome and
// raw covariates. Potential outcomes never live here.
struct Dataset {
  Schema schema;
  std::vector<int> exposure;  // contiguous labels 0..K-1
  Eigen::VectorXd outcome;
  Eigen::MatrixXd covariates;  // n x d, categorical codes stored as integers
  // Original label for each re-indexed exposure (identity for generated data).
  std::vector<std::int64_t> exposure_labels;

  Eigen::Index size() const { return outcome.size(); }
  Eigen::Index dimension() const { return covariates.cols(); }
  int exposure_count() const { return static_cast<int>(exposure_labels.size()); }
};

// Checks that every covariate value conforms to its column kind. Throws
// ValidationError naming the offending row and column.
void validate_row(const Schema& schema, const Eigen::Ref<const Eigen::VectorXd>& row,
                  const std::string& where);
void validate(const Dataset& data);

// Partitions rows by exposure, preserving row order. Every exposure in
// 0..K-1 must have at least one row.
std::vector<Dataset> split_by_exposure(const Dataset& data);

}  // namespace cfpred
