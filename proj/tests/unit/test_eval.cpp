#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "nodef/data.hpp"
#include "nodef/eval.hpp"
#include "support/oracles.hpp"

using namespace nodef;

TEST(LogLoss, HandValue) {
  const std::vector<double> p{0.9, 0.1};
  const std::vector<int> y{1, 0};
  EXPECT_NEAR(log_loss(p, y), 0.105361, 1e-6);
}

TEST(LogLoss, ClipsCertainMistakes) {
  const std::vector<double> p{0.0, 1.0};
  const std::vector<int> y{1, 0};
  const double hi = 1.0 - 1e-15;  // as rounded in double precision
  EXPECT_NEAR(log_loss(p, y), -0.5 * (std::log(1e-15) + std::log1p(-hi)), 1e-12);
}

TEST(Metrics, LengthChecks) {
  const std::vector<double> p{0.5};
  const std::vector<int> y{1, 0};
  EXPECT_THROW(log_loss(p, y), std::invalid_argument);
  EXPECT_THROW(accuracy(std::vector<double>{}, std::vector<int>{}), std::invalid_argument);
}

TEST(Accuracy, ThresholdCountsAsPositive) {
  const std::vector<double> p{0.5, 0.49, 0.8, 0.2};
  const std::vector<int> y{1, 0, 0, 0};
  EXPECT_DOUBLE_EQ(accuracy(p, y), 0.75);
}

TEST(Auc, HandValues) {
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}),
                   0.75);
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.5, 0.5}, std::vector<int>{0, 1}), 0.5);
  EXPECT_THROW(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), SingleClassError);
}

TEST(Auc, MatchesPairwiseOracle) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 2 + k;
    std::vector<double> p(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = std::round(u(rng) * 8.0) / 8.0;
      y[i] = i < 1 ? 1 : (i < 2 ? 0 : (u(rng) < 0.3 ? 1 : 0));
    }
    EXPECT_NEAR(auc(p, y), oracle::pairwise_auc(p, y), 1e-12);
  }
}

TEST(Report, KeyValueLine) {
  MetricsReport r{0.25, 0.5, 0.75, 4};
  EXPECT_EQ(to_key_value(r), "n=4 log_loss=0.25 accuracy=0.5 auc=0.75");
}

namespace {

Dataset toy(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Sample> s;
  for (std::size_t i = 0; i < n; ++i) {
    Vector x = oracle::random_vector(rng, 2);
    const double e = 0.5 + 3.0 * u(rng);
    if (u(rng) < 1.0 / (1.0 + std::exp(-2.0 * x[0]))) {
      const double d = e * u(rng);
      s.push_back(Sample::observed(std::move(x), d, e));
    } else {
      s.push_back(Sample::unobserved(std::move(x), e));
    }
  }
  return Dataset(2, s);
}

}  // namespace

TEST(GridSearchTest, DefaultGridSizes) {
  const TrainConfig base;
  EXPECT_EQ(enumerate_grid(GridSpec{}, ModelKind::nodef, base).size(), 27u);
  EXPECT_EQ(enumerate_grid(GridSpec{}, ModelKind::dfm, base).size(), 9u);
  EXPECT_EQ(enumerate_grid(GridSpec{}, ModelKind::naive, base).size(), 3u);
}

TEST(GridSearchTest, TieBreakOrder) {
  GridEvaluation a{{10, 0.1, 0.1}, {0.5, 0, 0, 1}};
  GridEvaluation b{{20, 1.0, 1.0}, {0.5, 0, 0, 1}};
  EXPECT_TRUE(better_candidate(a, b));
  b.point.L = 10;
  EXPECT_TRUE(better_candidate(b, a));
  a.point.lambda_w = 1.0;
  EXPECT_TRUE(better_candidate(b, a));
  b.validation.log_loss = 0.6;
  EXPECT_TRUE(better_candidate(a, b));
}

TEST(GridSearchTest, SelectionIgnoresEnumerationOrder) {
  const Dataset train = toy(3, 120), valid = toy(4, 60);
  TrainOptions base;
  base.config.max_iters = 10;
  GridSpec grid;
  grid.L = {4, 6};
  grid.lambda_w = {1.0, 0.01};
  grid.lambda_V = {0.1};
  auto points = enumerate_grid(grid, ModelKind::nodef, base.config);
  const GridSearchResult forward = grid_search(train, valid, points, ModelKind::nodef, base);
  std::reverse(points.begin(), points.end());
  const GridSearchResult backward = grid_search(train, valid, points, ModelKind::nodef, base);
  EXPECT_EQ(forward.best.L, backward.best.L);
  EXPECT_EQ(forward.best.lambda_w, backward.best.lambda_w);
  EXPECT_EQ(forward.best.lambda_V, backward.best.lambda_V);
  EXPECT_EQ(forward.evaluated.size(), 4u);
  for (const auto& ev : forward.evaluated) {
    EXPECT_GE(ev.validation.log_loss, forward.validation.log_loss);
  }
}
