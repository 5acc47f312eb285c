#include "cfpred/experiments.hpp"

#include <atomic>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <thread>

namespace cfpred {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

double NonlinearModel::mean(int z, double x) {
  return z == 0 ? 72.0 + 3.0 * std::sqrt(std::abs(x)) : 90.0 + std::exp(0.06 * x);
}

SyntheticUnit NonlinearModel::draw_given(int z, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  SyntheticUnit u;
  u.z = z;
  u.x = Eigen::VectorXd::Constant(1, (z == 0 ? 40.0 : 20.0) + 10.0 * normal(rng));
  u.y0 = mean(0, u.x(0)) + normal(rng);
  u.y1 = mean(1, u.x(0)) + normal(rng);
  u.y = z == 0 ? u.y0 : u.y1;
  return u;
}

SyntheticUnit NonlinearModel::draw(Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  return draw_given(coin(rng) ? 1 : 0, rng);
}

HighDimModel::HighDimModel(int d, int rank, Rng& rng) : d_(d), rank_(rank) {
  if (d < 30) throw ValidationError("high-dimensional experiment needs d >= 30");
  if (rank < 1 || rank > d) throw ValidationError("covariance rank must be in [1, d]");
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& f : factor_) {
    f.resize(d, rank);
    for (Eigen::Index c = 0; c < f.cols(); ++c) {
      for (Eigen::Index r = 0; r < f.rows(); ++r) f(r, c) = normal(rng);
    }
    // tr(A A') is the squared Frobenius norm of A.
    f /= f.norm();
  }
}

Eigen::MatrixXd HighDimModel::covariance(int z) const {
  return factor_.at(static_cast<std::size_t>(z)) * factor_.at(static_cast<std::size_t>(z)).transpose();
}

double HighDimModel::mean(int z, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() < 30) throw std::invalid_argument("high-dimensional mean needs d >= 30");
  return z == 0 ? x(0) + 5.0 * x(9) + 5.0 * x(19) + 0.5 : x(0) + x(9) - x(29);
}

SyntheticUnit HighDimModel::draw_given(int z, Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd g(rank_);
  for (Eigen::Index k = 0; k < g.size(); ++k) g(k) = normal(rng);
  SyntheticUnit u;
  u.z = z;
  u.x = factor_[static_cast<std::size_t>(z)] * g;
  u.y0 = mean(0, u.x) + kNoiseSd * normal(rng);
  u.y1 = mean(1, u.x) + kNoiseSd * normal(rng);
  u.y = z == 0 ? u.y0 : u.y1;
  return u;
}

SyntheticUnit HighDimModel::draw(Rng& rng) const {
  std::bernoulli_distribution coin(kExposureOneProbability);
  return draw_given(coin(rng) ? 1 : 0, rng);
}

SyntheticSample assemble(std::vector<SyntheticUnit> units) {
  if (units.empty()) throw std::invalid_argument("no units to assemble");
  const auto n = static_cast<Eigen::Index>(units.size());
  const auto d = units.front().x.size();
  SyntheticSample s;
  for (Eigen::Index j = 0; j < d; ++j) {
    s.data.schema.push_back(ColumnSchema::continuous("x" + std::to_string(j + 1)));
  }
  s.data.exposure_labels = {0, 1};
  s.data.outcome.resize(n);
  s.data.covariates.resize(n, d);
  s.data.exposure.resize(units.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& u = units[static_cast<std::size_t>(i)];
    s.data.exposure[i] = u.z;
    s.data.outcome(i) = u.y;
    s.data.covariates.row(i) = u.x.transpose();
  }
  s.units = std::move(units);
  return s;
}

SyntheticSample gen_nonlinear(int n, std::uint64_t seed) {
  if (n < 2) throw ValidationError("sample size must be at least 2");
  Rng rng = make_rng(seed, 0);
  std::vector<SyntheticUnit> units;
  units.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) units.push_back(NonlinearModel::draw(rng));
  return assemble(std::move(units));
}

SyntheticSample gen_highdim(int n, int d, int rank, std::uint64_t seed) {
  if (n < 2) throw ValidationError("sample size must be at least 2");
  Rng rng = make_rng(seed, 0);
  const HighDimModel model(d, rank, rng);
  std::vector<SyntheticUnit> units;
  units.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) units.push_back(model.draw(rng));
  return assemble(std::move(units));
}

Experiment parse_experiment(const std::string& name) {
  if (name == "nonlinear") return Experiment::nonlinear;
  if (name == "highdim") return Experiment::highdim;
  throw ValidationError("unknown experiment '" + name + "' (expected nonlinear or highdim)");
}

std::string to_string(Experiment e) {
  return e == Experiment::nonlinear ? "nonlinear" : "highdim";
}

CoverageConfig CoverageConfig::defaults(Experiment e) {
  CoverageConfig c;
  c.experiment = e;
  if (e == Experiment::nonlinear) {
    c.n = 120;
    c.knots = 10;
  } else {
    c.n = 100;
    c.d = 200;
    c.rank = 150;
    c.knots = 1;
  }
  return c;
}

namespace {

// Stream reserved for covariances shared across replicates.
constexpr std::uint64_t kSharedCovarianceStream = ~std::uint64_t{0};

struct ReplicateOutcome {
  std::array<bool, 2> covered{false, false};
  std::array<double, 2> width{0.0, 0.0};
};

ReplicateOutcome run_replicate(const CoverageConfig& config, int replicate,
                               const std::optional<HighDimModel>& shared) {
  Rng rng = make_rng(config.seed, static_cast<std::uint64_t>(replicate));

  std::vector<SyntheticUnit> units;
  units.reserve(static_cast<std::size_t>(config.n));
  std::array<SyntheticUnit, 2> fresh;
  if (config.experiment == Experiment::nonlinear) {
    for (int i = 0; i < config.n; ++i) units.push_back(NonlinearModel::draw(rng));
    for (int z = 0; z < 2; ++z) fresh[z] = NonlinearModel::draw_given(z, rng);
  } else {
    std::optional<HighDimModel> own;
    if (!shared) own.emplace(config.d, config.rank, rng);
    const HighDimModel& model = shared ? *shared : *own;
    for (int i = 0; i < config.n; ++i) units.push_back(model.draw(rng));
    for (int z = 0; z < 2; ++z) fresh[z] = model.draw_given(z, rng);
  }
  const SyntheticSample sample = assemble(std::move(units));

  AnalysisOptions options;
  options.knots = config.knots;
  options.grid_size = config.grid_size;
  options.margin = config.margin;
  options.beta = config.beta;
  options.conformal = config.conformal;
  const CounterfactualModel model(sample.data, options);

  ReplicateOutcome out;
  for (int z = 0; z < 2; ++z) {
    const ExposureAnalysis a = model.analyze(z, fresh[z].x);
    const PredictionSet set = prediction_set(a.scores, config.beta);
    const double truth = z == 0 ? fresh[z].y0 : fresh[z].y1;
    out.covered[z] = covers(set, model.grid(), truth);
    out.width[z] = set.width();
  }
  return out;
}

}  // namespace

CoverageReport coverage_run(const CoverageConfig& config) {
  if (config.runs < 1) throw ValidationError("runs must be at least 1");
  if (!(config.beta > 0.0 && config.beta < 1.0)) throw ValidationError("beta must be in (0, 1)");

  std::optional<HighDimModel> shared;
  if (config.experiment == Experiment::highdim && config.fixed_covariance) {
    Rng rng = make_rng(config.seed, kSharedCovarianceStream);
    shared.emplace(config.d, config.rank, rng);
  }

  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(config.runs));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (int r = next++; r < config.runs && !failed; r = next++) {
      try {
        outcomes[static_cast<std::size_t>(r)] = run_replicate(config, r, shared);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min(config.threads, config.runs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  CoverageReport report;
  report.experiment = config.experiment;
  report.beta = config.beta;
  report.runs = config.runs;
  report.seed = config.seed;
  for (const auto& o : outcomes) {
    for (int z = 0; z < 2; ++z) {
      report.covered[z] += o.covered[z] ? 1 : 0;
      report.mean_width[z] += o.width[z];
    }
  }
  for (int z = 0; z < 2; ++z) {
    report.coverage[z] = static_cast<double>(report.covered[z]) / config.runs;
    report.mean_width[z] /= config.runs;
  }
  return report;
}

}  // namespace cfpred
