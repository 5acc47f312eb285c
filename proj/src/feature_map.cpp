#include "cfpred/feature_map.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cfpred {

namespace {

// 1-based rank ceil(num*n/den) of the order statistic for quantile num/den.
std::size_t quantile_rank(std::size_t num, std::size_t den, std::size_t n) {
  if (num == 0) return 1;
  return (num * n + den - 1) / den;
}

}  // namespace

double empirical_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw std::invalid_argument("empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
  const auto n = values.size();
  std::size_t rank = 1;
  if (q > 0.0) {
    // q*n is evaluated with a small slack so that e.g. 0.3*10 selects the
    // 3rd, not the 4th, order statistic.
    const double qn = q * static_cast<double>(n);
    rank = static_cast<std::size_t>(std::ceil(qn - 1e-9 * std::max(1.0, qn)));
    rank = std::clamp<std::size_t>(rank, 1, n);
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   sorted.end());
  return sorted[rank - 1];
}

std::optional<int> knot_cap(int n, int d_prime, int d_dprime) {
  if (d_dprime < 1) return std::nullopt;
  const double ratio = static_cast<double>(n - d_prime) / d_dprime;
  return std::max(static_cast<int>(std::lround(ratio)), 1);
}

FeatureMapSpec build_spec(const Dataset& data, int m, const BuildOptions& options,
                          std::vector<std::string>* warnings) {
  if (m < 1) throw ValidationError("knot count must be at least 1");
  if (data.size() < 1) throw ValidationError("cannot build a feature map from an empty dataset");

  FeatureMapSpec spec;
  spec.knots_requested = m;
  spec.cap_mode = options.cap_mode;

  int d_prime = 0;
  int d_dprime = 0;
  int offset = 0;
  const auto n = static_cast<std::size_t>(data.size());
  for (std::size_t j = 0; j < data.schema.size(); ++j) {
    ColumnPlan plan;
    plan.column = data.schema[j];
    plan.offset = offset;
    switch (plan.column.kind) {
      case ColumnKind::binary:
        ++d_prime;
        plan.width = 1;
        break;
      case ColumnKind::categorical:
        plan.width = plan.column.categories - 1;
        break;
      case ColumnKind::continuous: {
        ++d_dprime;
        const auto col = data.covariates.col(static_cast<Eigen::Index>(j));
        std::vector<double> sorted(col.data(), col.data() + col.size());
        std::sort(sorted.begin(), sorted.end());
        plan.cap = sorted.back();
        for (int k = 1; k <= m; ++k) {
          const double c = sorted[quantile_rank(static_cast<std::size_t>(k - 1),
                                                static_cast<std::size_t>(m), n) - 1];
          if (plan.knots.empty() || c != plan.knots.back()) plan.knots.push_back(c);
        }
        // A last knot sitting on the cap yields an identically zero column.
        if (!plan.knots.empty() && plan.knots.back() == plan.cap) plan.knots.pop_back();
        plan.width = static_cast<int>(plan.knots.size());
        break;
      }
    }
    offset += plan.width;
    spec.columns.push_back(std::move(plan));
  }
  spec.p = offset;

  if (warnings != nullptr && d_dprime > 0) {
    int n_min = static_cast<int>(data.size());
    if (data.exposure_count() > 0) {
      std::vector<int> counts(data.exposure_count(), 0);
      for (int z : data.exposure) ++counts[z];
      n_min = *std::min_element(counts.begin(), counts.end());
    }
    const auto cap = knot_cap(n_min, d_prime, d_dprime);
    if (cap && m > *cap) {
      warnings->push_back("knot count m=" + std::to_string(m) + " exceeds the natural limit " +
                          std::to_string(*cap) + " for the smallest exposure group (n=" +
                          std::to_string(n_min) + ")");
    }
  }
  return spec;
}

namespace {

void encode_into(const FeatureMapSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                 Eigen::Ref<Eigen::VectorXd> out) {
  if (x.size() != static_cast<Eigen::Index>(spec.columns.size())) {
    throw ValidationError("covariate row has " + std::to_string(x.size()) + " entries, expected " +
                          std::to_string(spec.columns.size()));
  }
  out.setZero();
  for (std::size_t j = 0; j < spec.columns.size(); ++j) {
    const auto& plan = spec.columns[j];
    const double v = x(static_cast<Eigen::Index>(j));
    switch (plan.column.kind) {
      case ColumnKind::binary:
        if (v != 0.0 && v != 1.0) {
          throw ValidationError("column '" + plan.column.name + "': binary value must be 0 or 1");
        }
        out(plan.offset) = v;
        break;
      case ColumnKind::categorical: {
        if (v != std::floor(v) || v < 0 || v >= plan.column.categories) {
          throw ValidationError("column '" + plan.column.name + "': category code out of range");
        }
        const int k = static_cast<int>(v);
        if (k > 0) out(plan.offset + k - 1) = 1.0;
        break;
      }
      case ColumnKind::continuous: {
        if (!std::isfinite(v)) {
          throw ValidationError("column '" + plan.column.name + "': non-finite value");
        }
        const int w = plan.width;
        for (int k = 0; k + 1 < w; ++k) {
          out(plan.offset + k) = std::max(v - plan.knots[k], 0.0);
        }
        if (w > 0) {
          const double last = plan.knots[w - 1];
          double value;
          if (v <= plan.cap) {
            value = std::max(v - last, 0.0);
          } else if (spec.cap_mode == CapMode::continuous) {
            value = plan.cap - last;
          } else {
            value = plan.cap;
          }
          out(plan.offset + w - 1) = value;
        }
        break;
      }
    }
  }
}

}  // namespace

Eigen::VectorXd encode(const FeatureMapSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::VectorXd phi(spec.p);
  encode_into(spec, x, phi);
  return phi;
}

Eigen::VectorXd encode_with_intercept(const FeatureMapSpec& spec,
                                      const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::VectorXd phi(spec.p + 1);
  phi(0) = 1.0;
  encode_into(spec, x, phi.tail(spec.p));
  return phi;
}

Eigen::MatrixXd design_matrix(const FeatureMapSpec& spec, const Dataset& data) {
  Eigen::MatrixXd design(data.size(), spec.p + 1);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    design.row(i) = encode_with_intercept(spec, data.covariates.row(i).transpose()).transpose();
  }
  return design;
}

}  // namespace cfpred
