#include "cfpred/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cfpred {

namespace {

void check_dim(const SuffStats& stats, Eigen::Index size) {
  if (size != stats.dim()) {
    throw std::invalid_argument("regressor dimension " + std::to_string(size) +
                                " does not match statistics dimension " +
                                std::to_string(stats.dim()));
  }
}

// Residual sum of squares energy - 2 w'cross + w'Gw, clamped at zero.
double residual_energy(const SuffStats& stats, const WeightVector& w,
                       const Eigen::VectorXd& gram_w) {
  const double e = stats.energy - 2.0 * w.dot(stats.cross) + w.dot(gram_w);
  return std::max(e, 0.0);
}

double penalty(const RegWeights& lambda, const WeightVector& w) {
  return lambda.cwiseProduct(w.cwiseAbs()).sum();
}

// Below this the residual is an exact interpolation and sqrt(.) has no
// usable subgradient.
constexpr double kInterpolationFloor = 1e-300;

}  // namespace

SuffStats SuffStats::empty(Eigen::Index dim) {
  SuffStats s;
  s.gram = Eigen::MatrixXd::Zero(dim, dim);
  s.cross = Eigen::VectorXd::Zero(dim);
  return s;
}

SuffStats SuffStats::from_design(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                 const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (design.rows() != y.size()) throw std::invalid_argument("design/outcome length mismatch");
  SuffStats s;
  s.gram = Eigen::MatrixXd::Zero(design.cols(), design.cols());
  s.gram.selfadjointView<Eigen::Lower>().rankUpdate(design.transpose());
  s.gram = s.gram.selfadjointView<Eigen::Lower>();
  s.cross = design.transpose() * y;
  s.energy = y.squaredNorm();
  s.n = design.rows();
  return s;
}

void SuffStats::add(const Eigen::Ref<const Eigen::VectorXd>& phi, double y) {
  check_dim(*this, phi.size());
  gram.noalias() += phi * phi.transpose();
  cross += phi * y;
  energy += y * y;
  ++n;
}

void SuffStats::remove(const Eigen::Ref<const Eigen::VectorXd>& phi, double y) {
  check_dim(*this, phi.size());
  if (n == 0) throw std::logic_error("cannot remove a sample from empty statistics");
  gram.noalias() -= phi * phi.transpose();
  cross -= phi * y;
  energy = std::max(energy - y * y, 0.0);
  --n;
  if (n == 0) {
    gram.setZero();
    cross.setZero();
    energy = 0.0;
  }
}

SuffStats stats_add(SuffStats stats, const Eigen::Ref<const Eigen::VectorXd>& phi, double y) {
  stats.add(phi, y);
  return stats;
}

SuffStats stats_remove(SuffStats stats, const Eigen::Ref<const Eigen::VectorXd>& phi, double y) {
  stats.remove(phi, y);
  return stats;
}

RegWeights spice_weights(const SuffStats& stats) {
  RegWeights lambda = RegWeights::Zero(stats.dim());
  if (stats.n == 0) return lambda;
  const double n = static_cast<double>(stats.n);
  for (Eigen::Index j = 1; j < stats.dim(); ++j) {
    lambda(j) = std::sqrt(std::max(stats.gram(j, j), 0.0)) / n;
  }
  return lambda;
}

double cost(const SuffStats& stats, const RegWeights& lambda, const WeightVector& w) {
  check_dim(stats, w.size());
  if (stats.n < 1) throw std::invalid_argument("cost of empty statistics");
  const Eigen::VectorXd gram_w = stats.gram * w;
  return std::sqrt(residual_energy(stats, w, gram_w) / static_cast<double>(stats.n)) +
         penalty(lambda, w);
}

double coordinate_update(double alpha, double beta, double c, double lambda, double n) {
  if (alpha <= 0.0) return 0.0;
  c = std::max(c, 0.0);
  if (std::abs(beta) <= lambda * std::sqrt(n * c)) return 0.0;
  if (lambda == 0.0) return beta / alpha;
  const double denom = alpha - n * lambda * lambda;
  if (denom <= 0.0) return 0.0;
  const double slack = std::max(alpha * c - beta * beta, 0.0);
  const double magnitude = std::abs(beta) - lambda * std::sqrt(n * slack / denom);
  if (magnitude <= 0.0) return 0.0;
  return std::copysign(magnitude, beta) / alpha;
}

namespace {

// Quadratic model of the residual energy over the penalized coordinates:
// RSS(w) = energy - 2 w'cross + w'gram w, with the intercept (an unpenalized
// coordinate) minimized out exactly.
struct Reduced {
  Eigen::MatrixXd gram;
  Eigen::VectorXd cross;
  double energy = 0.0;
  // Optimal intercept is (intercept_cross - intercept_row' w) / intercept_gram.
  bool has_intercept = false;
  double intercept_gram = 0.0;
  double intercept_cross = 0.0;
  Eigen::VectorXd intercept_row;
};

Reduced reduce(const SuffStats& stats, const RegWeights& lambda) {
  Reduced r;
  const Eigen::Index dim = stats.dim();
  r.has_intercept = dim >= 1 && lambda(0) == 0.0 && stats.gram(0, 0) > 0.0;
  if (!r.has_intercept) {
    r.gram = stats.gram;
    r.cross = stats.cross;
    r.energy = stats.energy;
    return r;
  }
  const Eigen::Index p = dim - 1;
  r.intercept_gram = stats.gram(0, 0);
  r.intercept_cross = stats.cross(0);
  r.intercept_row = stats.gram.col(0).tail(p);
  r.gram = stats.gram.bottomRightCorner(p, p) -
           r.intercept_row * r.intercept_row.transpose() / r.intercept_gram;
  r.cross = stats.cross.tail(p) - r.intercept_row * (r.intercept_cross / r.intercept_gram);
  r.energy = stats.energy - r.intercept_cross * r.intercept_cross / r.intercept_gram;
  return r;
}

double reduced_energy(const Reduced& r, const Eigen::VectorXd& v, const Eigen::VectorXd& gram_v) {
  return std::max(r.energy - 2.0 * v.dot(r.cross) + v.dot(gram_v), 0.0);
}

}  // namespace

FitResult fit(const SuffStats& stats, const RegWeights& lambda, const WeightVector& w_init,
              const FitOptions& options) {
  check_dim(stats, w_init.size());
  check_dim(stats, lambda.size());
  if (stats.n < 1) throw std::invalid_argument("cannot fit empty statistics");

  const double n = static_cast<double>(stats.n);
  const double outcome_rms = std::sqrt(stats.energy / n);
  const double move_tol = options.tol * (outcome_rms > 0.0 ? outcome_rms : 1.0);

  const Reduced red = reduce(stats, lambda);
  const Eigen::Index dim = red.cross.size();
  const RegWeights pen = lambda.tail(dim);

  FitResult result;
  Eigen::VectorXd v = w_init.tail(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (red.gram(j, j) <= 0.0) v(j) = 0.0;
  }
  Eigen::VectorXd gram_v = red.gram * v;
  double energy = reduced_energy(red, v, gram_v);
  double current = std::sqrt(energy / n) + penalty(pen, v);
  if (options.record_history) result.history.push_back(current);

  while (result.sweeps < options.max_sweeps) {
    if (energy < kInterpolationFloor) {
      result.converged = true;
      break;
    }
    double max_move = 0.0;
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double alpha = red.gram(j, j);
      if (alpha <= 0.0) continue;
      const double vj = v(j);
      const double corr = red.cross(j) - gram_v(j);  // phi_j' r
      const double beta = corr + alpha * vj;
      const double c = std::max(energy + 2.0 * vj * corr + alpha * vj * vj, 0.0);
      const double updated = coordinate_update(alpha, beta, c, pen(j), n);
      const double delta = updated - vj;
      if (delta != 0.0) {
        gram_v += delta * red.gram.col(j);
        v(j) = updated;
        energy = std::max(c - 2.0 * beta * updated + alpha * updated * updated, 0.0);
        max_move = std::max(max_move, std::abs(delta) * std::sqrt(alpha / n));
      }
    }
    ++result.sweeps;

    // Refresh the running quantities to keep rounding drift out of the cost.
    gram_v.noalias() = red.gram * v;
    energy = reduced_energy(red, v, gram_v);
    const double next = std::sqrt(energy / n) + penalty(pen, v);
    if (options.record_history) result.history.push_back(next);
    const double decrease = current - next;
    current = next;
    if (decrease <= options.tol * std::abs(next) && max_move <= move_tol) {
      result.converged = true;
      break;
    }
  }

  WeightVector w(stats.dim());
  if (red.has_intercept) {
    w(0) = (red.intercept_cross - red.intercept_row.dot(v)) / red.intercept_gram;
  }
  w.tail(dim) = v;
  result.cost = cost(stats, lambda, w);
  const double initial = cost(stats, lambda, w_init);
  if (result.cost > initial) {
    result.w = w_init;
    result.cost = initial;
  } else {
    result.w = std::move(w);
  }
  return result;
}

double predict_mean(const WeightVector& w, const Eigen::Ref<const Eigen::VectorXd>& phi) {
  if (w.size() != phi.size()) {
    throw std::invalid_argument("weight/regressor dimension mismatch");
  }
  return w.dot(phi);
}

}  // namespace cfpred
