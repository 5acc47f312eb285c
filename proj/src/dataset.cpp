#include "cfpred/dataset.hpp"

#include <cmath>
#include <string>

namespace cfpred {

ColumnSchema ColumnSchema::categorical(std::string name, int k) {
  if (k < 2) {
    throw ValidationError("column '" + name + "': categorical columns need at least 2 categories");
  }
  if (k == 2) return binary(std::move(name));
  return {std::move(name), ColumnKind::categorical, k};
}

void validate_row(const Schema& schema, const Eigen::Ref<const Eigen::VectorXd>& row,
                  const std::string& where) {
  if (row.size() != static_cast<Eigen::Index>(schema.size())) {
    throw ValidationError(where + ": expected " + std::to_string(schema.size()) +
                          " covariates, got " + std::to_string(row.size()));
  }
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto& col = schema[j];
    const double v = row(static_cast<Eigen::Index>(j));
    if (!std::isfinite(v)) {
      throw ValidationError(where + ", column '" + col.name + "': non-finite value");
    }
    if (col.kind == ColumnKind::continuous) continue;
    if (v != std::floor(v) || v < 0 || v >= col.categories) {
      throw ValidationError(where + ", column '" + col.name + "': category code " +
                            std::to_string(v) + " out of range [0, " +
                            std::to_string(col.categories - 1) + "]");
    }
  }
}

void validate(const Dataset& data) {
  const auto n = data.size();
  if (n < 1) throw ValidationError("dataset has no rows");
  if (data.covariates.rows() != n || static_cast<Eigen::Index>(data.exposure.size()) != n) {
    throw ValidationError("dataset columns have inconsistent lengths");
  }
  if (data.covariates.cols() != static_cast<Eigen::Index>(data.schema.size())) {
    throw ValidationError("dataset covariates do not match the schema");
  }
  const int k = data.exposure_count();
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string where = "row " + std::to_string(i + 1);
    if (data.exposure[i] < 0 || data.exposure[i] >= k) {
      throw ValidationError(where + ": exposure index out of range");
    }
    if (!std::isfinite(data.outcome(i))) {
      throw ValidationError(where + ": non-finite outcome");
    }
    validate_row(data.schema, data.covariates.row(i).transpose(), where);
  }
}

std::vector<Dataset> split_by_exposure(const Dataset& data) {
  const int k = data.exposure_count();
  std::vector<std::vector<Eigen::Index>> rows(k);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const int z = data.exposure[i];
    if (z < 0 || z >= k) throw ValidationError("exposure index out of range");
    rows[z].push_back(i);
  }

  std::vector<Dataset> groups;
  groups.reserve(k);
  for (int z = 0; z < k; ++z) {
    if (rows[z].empty()) {
      throw ValidationError("exposure " + std::to_string(data.exposure_labels[z]) +
                            " has no samples");
    }
    const auto nz = static_cast<Eigen::Index>(rows[z].size());
    Dataset g;
    g.schema = data.schema;
    g.exposure.assign(rows[z].size(), z);
    g.outcome.resize(nz);
    g.covariates.resize(nz, data.dimension());
    for (Eigen::Index r = 0; r < nz; ++r) {
      g.outcome(r) = data.outcome(rows[z][r]);
      g.covariates.row(r) = data.covariates.row(rows[z][r]);
    }
    g.exposure_labels = data.exposure_labels;
    groups.push_back(std::move(g));
  }
  return groups;
}

}  // namespace cfpred
