#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cfpred/conformal.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace cfpred;
using doctest::Approx;

namespace {

struct Problem {
  Eigen::MatrixXd design;
  Eigen::VectorXd y;
  Eigen::VectorXd x_phi;
  OutcomeGrid grid;
  ConformalScores scores;
};

Problem random_problem(std::mt19937_64& rng, int n, int p, int grid_size) {
  Problem pr;
  auto inst = oracle::random_instance(rng, n, p);
  pr.design = std::move(inst.design);
  pr.y = std::move(inst.y);
  std::normal_distribution<double> normal;
  pr.x_phi = Eigen::VectorXd::Ones(p + 1);
  for (int j = 1; j <= p; ++j) pr.x_phi(j) = normal(rng);
  pr.grid = make_grid(std::span<const double>(pr.y.data(), n), grid_size, 0.25);
  const SuffStats stats = SuffStats::from_design(pr.design, pr.y);
  const FitResult base = fit(stats, spice_weights(stats), Eigen::VectorXd::Zero(p + 1));
  pr.scores = conformal_scores(stats, base.w, pr.design, pr.y, pr.x_phi, pr.grid);
  return pr;
}

ConformalScores manual_scores(std::vector<double> points, std::vector<int> rank, int n) {
  ConformalScores s;
  s.grid.points = std::move(points);
  s.grid.lo = s.grid.points.front();
  s.grid.hi = s.grid.points.back();
  s.rank = std::move(rank);
  s.n = n;
  s.prediction_at.assign(s.rank.size(), 0.0);
  return s;
}

}  // namespace

TEST_CASE("grid construction") {
  const std::vector<double> y{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const OutcomeGrid g = make_grid(y, 5, 0.25);
  const std::vector<double> expected{-2.5, 1.25, 5, 8.75, 12.5};
  REQUIRE(g.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) CHECK(g.points[k] == Approx(expected[k]).epsilon(1e-15));
  CHECK(g.step() == Approx(3.75));

  const OutcomeGrid single = make_grid(std::vector<double>{3.0}, 7, 0.25);
  CHECK(single.lo == 2.0);
  CHECK(single.hi == 4.0);

  const OutcomeGrid tight = make_grid(y, 11, 0.0);
  CHECK(tight.points.front() == 0.0);
  CHECK(tight.points.back() == 10.0);
  CHECK(std::adjacent_find(tight.points.begin(), tight.points.end(), std::greater_equal<>()) ==
        tight.points.end());

  CHECK_THROWS_AS(make_grid(std::vector<double>{}, 5, 0.25), ValidationError);
  CHECK_THROWS_AS(make_grid(y, 1, 0.25), ValidationError);

  CHECK(tight.nearest(-100) == 0);
  CHECK(tight.nearest(4.4) == 4);
  CHECK(tight.nearest(4.6) == 5);
  CHECK(tight.nearest(100) == 10);
}

TEST_CASE("conformity rank counts") {
  const std::vector<double> r{1, 2, 3, 4};
  CHECK(conformity_rank(r, 2.5) == 3);
  CHECK(conformity_rank(r, 0.5) == 1);
  CHECK(conformity_rank(r, 4.0) == 5);
  CHECK(conformity_rank(r, 2.0) == 3);
}

TEST_CASE("inclusion threshold") {
  CHECK(rank_threshold(0.9, 9) == 9);
  CHECK(rank_threshold(0.999, 9) == 10);
  CHECK(rank_threshold(0.3, 9) == 3);
  CHECK(rank_threshold(0.31, 9) == 4);

  const auto s = manual_scores({0, 1, 2}, {9, 10, 1}, 9);
  const PredictionSet set = prediction_set(s, 0.9);
  CHECK(set.included == std::vector<bool>{true, false, true});
  const PredictionSet full = prediction_set(s, 0.999);
  CHECK(full.included == std::vector<bool>{true, true, true});
  REQUIRE(full.intervals.size() == 1);
  CHECK(full.intervals[0] == std::pair<double, double>{0, 2});
}

TEST_CASE("threshold agrees with exact integer arithmetic at every level") {
  for (int n : {1, 2, 9, 10, 59, 99, 119, 1000}) {
    for (int level = 1; level < 1000; ++level) {
      for (int rank : {1, n / 2 + 1, n, n + 1}) {
        CHECK((rank <= rank_threshold(level / 1000.0, n)) ==
              oracle::included_at_level(rank, n, level));
      }
    }
  }
}

TEST_CASE("point prediction") {
  CHECK(point_prediction(manual_scores({1, 2, 3, 4}, {3, 1, 2, 4}, 5)) == 2.0);
  CHECK(point_prediction(manual_scores({3.5, 4.0, 4.5, 5.0, 5.5}, {2, 1, 1, 1, 3}, 5)) == 4.5);
  // The first run of minimizers wins.
  CHECK(point_prediction(manual_scores({1, 2, 3, 4, 5}, {1, 1, 2, 1, 1}, 5)) == 1.5);
}

TEST_CASE("min beta curve") {
  const auto s = manual_scores({0, 1, 2}, {1, 5, 10}, 9);
  const auto b = min_beta_curve(s);
  CHECK(b[0] == 0.0);
  CHECK(b[1] == Approx(0.4));
  CHECK(b[2] == Approx(0.9));
}

TEST_CASE("set structure") {
  const auto s = manual_scores({0, 1, 2, 3, 4, 5, 6}, {1, 8, 2, 3, 9, 9, 4}, 9);
  const PredictionSet set = prediction_set(s, 0.5);
  REQUIRE(set.intervals.size() == 3);
  CHECK(set.intervals[0] == std::pair<double, double>{0, 0});
  CHECK(set.intervals[1] == std::pair<double, double>{2, 3});
  CHECK(set.intervals[2] == std::pair<double, double>{6, 6});
  CHECK(set.width() == 1.0);
  CHECK(set.point == 0.0);
  CHECK(covers(set, s.grid, 2.4));
  CHECK_FALSE(covers(set, s.grid, 1.2));
  CHECK(covers(set, s.grid, 6.4));
  CHECK_FALSE(covers(set, s.grid, 6.6));
  CHECK(prediction_set(manual_scores({0, 1}, {2, 3}, 9), 0.05).empty());
}

TEST_CASE("scores are valid ranks and sets are well formed") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 8 + trial;
    const auto pr = random_problem(rng, n, 1 + trial % 5, 60);
    CHECK(pr.scores.n == n);
    for (std::size_t k = 0; k < pr.grid.size(); ++k) {
      CHECK(pr.scores.rank[k] >= 1);
      CHECK(pr.scores.rank[k] <= n + 1);
      CHECK(pr.scores.pi(k) * (n + 1) == Approx(pr.scores.rank[k]).epsilon(1e-9));
    }
    CHECK(pr.grid.lo < pr.y.minCoeff());
    CHECK(pr.grid.hi > pr.y.maxCoeff());
    for (double beta = 0.05; beta < 1.0; beta += 0.05) {
      const PredictionSet set = prediction_set(pr.scores, beta);
      std::size_t members = 0;
      double prev_hi = -std::numeric_limits<double>::infinity();
      for (const auto& [lo, hi] : set.intervals) {
        CHECK(lo <= hi);
        CHECK(lo > prev_hi);
        prev_hi = hi;
      }
      for (std::size_t k = 0; k < pr.grid.size(); ++k) {
        int hits = 0;
        for (const auto& [lo, hi] : set.intervals) {
          if (pr.grid.points[k] >= lo && pr.grid.points[k] <= hi) ++hits;
        }
        CHECK(hits == (set.included[k] ? 1 : 0));
        members += set.included[k];
      }
      if (members > 0) {
        const bool inside = std::any_of(set.intervals.begin(), set.intervals.end(), [&](auto iv) {
          return set.point >= iv.first && set.point <= iv.second;
        });
        CHECK(inside);
      }
    }
  }
}

TEST_CASE("sets are nested in beta") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pr = random_problem(rng, 20 + trial, 3, 80);
    std::vector<bool> prev(pr.grid.size(), false);
    for (int level = 1; level < 1000; ++level) {
      const PredictionSet set = prediction_set(pr.scores, level / 1000.0);
      for (std::size_t k = 0; k < prev.size(); ++k) CHECK((!prev[k] || set.included[k]));
      prev = set.included;
    }
  }
}

TEST_CASE("membership flips exactly at the min beta curve") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pr = random_problem(rng, 15 + trial, 2, 50);
    const auto b = min_beta_curve(pr.scores);
    for (int level = 1; level < 1000; ++level) {
      const PredictionSet set = prediction_set(pr.scores, level / 1000.0);
      for (std::size_t k = 0; k < b.size(); ++k) {
        const bool scan = oracle::included_at_level(pr.scores.rank[k], pr.scores.n, level);
        CHECK(set.included[k] == scan);
        CHECK(scan == (level / 1000.0 > b[k] + 1e-12));
      }
    }
  }
}

TEST_CASE("incremental scores equal cold-start refits") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 10 + static_cast<int>(rng() % 21);
    const int p = 1 + static_cast<int>(rng() % 5);
    const auto pr = random_problem(rng, n, p, 40);
    CHECK(pr.scores.rank == oracle::cold_start_ranks(pr.design, pr.y, pr.x_phi, pr.grid));
  }
}

TEST_CASE("intercept-only point prediction sits at the sample mean") {
  const std::vector<double> values{-2.0, -1.2, -0.3, 0.3, 1.2, 2.0, 0.0};
  Eigen::MatrixXd design = Eigen::MatrixXd::Ones(7, 1);
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(values.data(), 7);
  const OutcomeGrid grid = make_grid(values, 81, 0.25);
  const SuffStats stats = SuffStats::from_design(design, y);
  const FitResult base = fit(stats, spice_weights(stats), Eigen::VectorXd::Zero(1));
  const ConformalScores scores =
      conformal_scores(stats, base.w, design, y, Eigen::VectorXd::Ones(1), grid);

  const auto ranks = oracle::cold_start_ranks(design, y, Eigen::VectorXd::Ones(1), grid);
  CHECK(scores.rank == ranks);
  CHECK(std::abs(point_prediction(scores) - y.mean()) <= grid.step());
}

TEST_CASE("dimension mismatches are rejected") {
  std::mt19937_64 rng(25);
  const auto inst = oracle::random_instance(rng, 10, 2);
  const SuffStats stats = SuffStats::from_design(inst.design, inst.y);
  const OutcomeGrid grid = make_grid(std::span<const double>(inst.y.data(), 10), 5, 0.25);
  CHECK_THROWS_AS(conformal_scores(stats, Eigen::VectorXd::Zero(3), inst.design, inst.y,
                                   Eigen::VectorXd::Ones(2), grid),
                  std::invalid_argument);
}

TEST_CASE("scores CSV") {
  const auto s = manual_scores({0, 0.5}, {1, 3}, 3);
  std::ostringstream out;
  write_scores_csv(out, s);
  CHECK(out.str() == "y_grid,pi,prediction_at\n0,0.25,0\n0.5,0.75,0\n");
}
