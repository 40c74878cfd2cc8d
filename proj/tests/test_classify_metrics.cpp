#include <gtest/gtest.h>

#include <random>

#include "jmml/forest.hpp"
#include "jmml/metrics.hpp"
#include "oracles.hpp"

using namespace jmml;
using forest::ForestOptions;
using metrics::F1Average;

namespace {

constexpr Polarity P = Polarity::positive;
constexpr Polarity N = Polarity::negative;

// Two 2-D clusters separated along x0 by a clear margin.
void separable(std::size_t n, std::uint64_t seed, Matrix& x, std::vector<Polarity>& y, double gap = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  x.resize(static_cast<Eigen::Index>(n), 2);
  y.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i % 2 == 0;
    x(static_cast<Eigen::Index>(i), 0) = pos ? gap + u(rng) : -gap - u(rng);
    x(static_cast<Eigen::Index>(i), 1) = u(rng);
    y.push_back(pos ? P : N);
  }
}

std::vector<Polarity> repeat(Polarity p, std::size_t n) { return std::vector<Polarity>(n, p); }

std::vector<Polarity> concat(std::vector<Polarity> a, const std::vector<Polarity>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST(Evaluate, Perfect) {
  const std::vector<Polarity> y{P, N, P, N};
  const auto r = metrics::evaluate(y, y);
  EXPECT_DOUBLE_EQ(r.accuracy, 100.0);
  EXPECT_DOUBLE_EQ(r.f1, 100.0);
}

TEST(Evaluate, AllOneClassOnBalancedSet) {
  const auto y = concat(repeat(P, 50), repeat(N, 50));
  const auto r = metrics::evaluate(y, repeat(P, 100));
  EXPECT_DOUBLE_EQ(r.accuracy, 50.0);
  // F1(+) = 2*50/(100+50) = 2/3, F1(-) = 0.
  EXPECT_NEAR(r.f1, 100.0 / 3.0, 1e-12);
}

TEST(Evaluate, HandConfusionMatrix) {
  // rows: true '-', true '+'; cols: predicted '-', '+'
  const auto y_true = concat(repeat(N, 50), repeat(P, 50));
  auto y_pred = concat(concat(repeat(N, 40), repeat(P, 10)), concat(repeat(N, 5), repeat(P, 45)));
  const auto r = metrics::evaluate(y_true, y_pred);
  EXPECT_EQ(r.confusion[0][0], 40u);
  EXPECT_EQ(r.confusion[0][1], 10u);
  EXPECT_EQ(r.confusion[1][0], 5u);
  EXPECT_EQ(r.confusion[1][1], 45u);
  EXPECT_DOUBLE_EQ(r.accuracy, 85.0);
  const double f_neg = 2.0 * 40 / (2.0 * 40 + 5 + 10);
  const double f_pos = 2.0 * 45 / (2.0 * 45 + 10 + 5);
  EXPECT_NEAR(r.f1, 50.0 * (f_neg + f_pos), 1e-12);
  EXPECT_NEAR(metrics::evaluate(y_true, y_pred, F1Average::positive).f1, 100.0 * f_pos, 1e-12);
  EXPECT_NEAR(metrics::evaluate(y_true, y_pred, F1Average::weighted).f1, 50.0 * (f_neg + f_pos), 1e-12);
}

TEST(Evaluate, SymmetricBalancedGivesF1EqualAccuracy) {
  const auto y_true = concat(repeat(N, 30), repeat(P, 30));
  const auto y_pred = concat(concat(repeat(N, 22), repeat(P, 8)), concat(repeat(N, 8), repeat(P, 22)));
  const auto r = metrics::evaluate(y_true, y_pred);
  EXPECT_NEAR(r.f1, r.accuracy, 1e-12);
}

TEST(Evaluate, Errors) {
  EXPECT_THROW(metrics::evaluate({P, N}, {P}), ShapeError);
  EXPECT_THROW(metrics::evaluate({}, {}), InvalidArgument);
}

TEST(Evaluate, BoundsProperty) {
  std::mt19937_64 rng(1);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Polarity> a, b;
    const int n = 1 + trial % 17;
    for (int i = 0; i < n; ++i) {
      a.push_back(coin(rng) ? P : N);
      b.push_back(coin(rng) ? P : N);
    }
    const auto r = metrics::evaluate(a, b);
    EXPECT_GE(r.accuracy, 0.0);
    EXPECT_LE(r.accuracy, 100.0);
    EXPECT_GE(r.f1, 0.0);
    EXPECT_LE(r.f1, 100.0);
    EXPECT_EQ(r.confusion[0][0] + r.confusion[0][1] + r.confusion[1][0] + r.confusion[1][1], static_cast<std::size_t>(n));
  }
}

TEST(Forest, SeparableTrainingAccuracy) {
  Matrix x;
  std::vector<Polarity> y;
  separable(200, 2, x, y);
  const auto rf = forest::fit_rf(x, y, {});
  EXPECT_GE(metrics::evaluate(y, forest::predict(rf, x)).accuracy, 99.0);
  EXPECT_EQ(rf.trees.size(), 100u);
  for (const auto& t : rf.trees) EXPECT_LE(t.depth(), 8u);
}

TEST(Forest, TreeInvariants) {
  std::mt19937_64 rng(3);
  const Matrix x = oracle::randn(120, 5, rng);
  std::vector<Polarity> y;
  for (Eigen::Index i = 0; i < 120; ++i) y.push_back(x(i, 0) + 0.5 * x(i, 3) > 0 ? P : N);
  const auto rf = forest::fit_rf(x, y, {20, 4, 3});
  for (const auto& t : rf.trees) {
    EXPECT_LE(t.depth(), 4u);
    for (const auto& n : t.nodes) {
      if (n.feature < 0) continue;
      EXPECT_TRUE(std::isfinite(n.threshold));
      EXPECT_GE(n.left, 0);
      EXPECT_GE(n.right, 0);
    }
  }
}

TEST(Forest, StumpIsConstantPerHalfSpace) {
  Matrix x;
  std::vector<Polarity> y;
  separable(100, 4, x, y);
  const auto rf = forest::fit_rf(x, y, {1, 1, 4, false, 2});
  const auto& t = rf.trees.at(0);
  ASSERT_EQ(t.nodes.size(), 3u);
  const auto& root = t.nodes[0];
  EXPECT_EQ(root.feature, 0);
  Matrix probe(4, 2);
  probe << root.threshold - 5, 0.0, root.threshold - 0.01, 9.0, root.threshold + 0.01, -3.0, root.threshold + 5, 0.5;
  const auto p = forest::predict(rf, probe);
  EXPECT_EQ(p[0], p[1]);
  EXPECT_EQ(p[2], p[3]);
  EXPECT_NE(p[0], p[2]);
}

TEST(Forest, DeterministicPerSeed) {
  Matrix x;
  std::vector<Polarity> y;
  separable(80, 5, x, y, 0.1);
  const auto a = forest::fit_rf(x, y, {15, 5, 42});
  const auto b = forest::fit_rf(x, y, {15, 5, 42});
  const auto c = forest::fit_rf(x, y, {15, 5, 43});
  EXPECT_EQ(forest::to_json(a).dump(), forest::to_json(b).dump());
  EXPECT_NE(forest::to_json(a).dump(), forest::to_json(c).dump());
  const auto back = forest::forest_from_json(nn::json::parse(forest::to_json(a).dump()));
  EXPECT_EQ(forest::predict(back, x), forest::predict(a, x));
}

TEST(Forest, HandTracedVotes) {
  // Three hand-built stumps on feature 0 with thresholds 0, 1, 2; all send
  // the right side to '+'. A sample at 1.5 gets votes (+, +, -) -> '+'.
  forest::RandomForest rf;
  rf.n_features = 1;
  for (double thr : {0.0, 1.0, 2.0}) {
    forest::DecisionTree t;
    forest::TreeNode root, l, r;
    root.feature = 0;
    root.threshold = thr;
    root.left = 1;
    root.right = 2;
    l.votes = {3.0, 0.0};
    r.votes = {0.0, 3.0};
    t.nodes = {root, l, r};
    rf.trees.push_back(t);
  }
  Matrix probe(4, 1);
  probe << -1.0, 0.5, 1.5, 2.5;
  EXPECT_EQ(forest::predict(rf, probe), (std::vector<Polarity>{N, N, P, P}));
  // Even split: drop the third tree, then 0.5 is (+, -) -> tie -> '+'.
  rf.trees.pop_back();
  EXPECT_EQ(forest::predict(rf, probe)[1], P);
}

TEST(Forest, OneTreeForestIsTheTree) {
  Matrix x;
  std::vector<Polarity> y;
  separable(60, 6, x, y, 0.05);
  const auto rf = forest::fit_rf(x, y, {1, 3, 6});
  const auto pred = forest::predict(rf, x);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    EXPECT_EQ(pred[static_cast<std::size_t>(i)], rf.trees[0].predict(x.data() + i * x.cols()));
}

TEST(Forest, Errors) {
  Matrix x;
  std::vector<Polarity> y;
  separable(10, 7, x, y);
  EXPECT_THROW(forest::fit_rf(x, repeat(P, 10), {}), SingleClassError);
  const auto rf = forest::fit_rf(x, y, {3, 2, 0});
  EXPECT_THROW(forest::predict(rf, Matrix::Zero(2, 3)), ShapeError);
}

TEST(Forest, DuplicatedTrainingSetKeepsStump) {
  std::mt19937_64 rng(8);
  const Matrix x = oracle::randn(50, 3, rng);
  std::vector<Polarity> y;
  for (Eigen::Index i = 0; i < 50; ++i) y.push_back(x(i, 1) > 0.2 ? P : N);
  Matrix x2(100, 3);
  x2 << x, x;
  const auto y2 = concat(y, y);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ForestOptions opt{1, 1, seed, false, 3};
    const auto a = forest::fit_rf(x, y, opt).trees[0].nodes[0];
    const auto b = forest::fit_rf(x2, y2, opt).trees[0].nodes[0];
    EXPECT_EQ(a.feature, b.feature);
    EXPECT_DOUBLE_EQ(a.threshold, b.threshold);
  }
}

TEST(GridSearch, SingleCell) {
  Matrix x;
  std::vector<Polarity> y;
  separable(40, 9, x, y);
  const auto g = metrics::grid_search(x, y, {7}, {3});
  EXPECT_EQ(g.n_estimators, 7u);
  EXPECT_EQ(g.max_depth, 3u);
}

TEST(GridSearch, TiesGoToSmallerConfig) {
  Matrix x;
  std::vector<Polarity> y;
  separable(60, 10, x, y);
  // Every cell scores 100 on this margin, so the smallest cell wins.
  const auto g = metrics::grid_search(x, y, {20, 10, 10}, {4, 2, 2});
  EXPECT_EQ(g.n_estimators, 10u);
  EXPECT_EQ(g.max_depth, 2u);
  EXPECT_DOUBLE_EQ(g.cv_f1, 100.0);
}

TEST(GridSearch, ShallowFixtureChoosesShallowDepth) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Matrix x;
    std::vector<Polarity> y;
    separable(100, seed + 20, x, y, 0.2);
    const auto g = metrics::grid_search(x, y, {10, 30}, {1, 2, 4, 8, 16}, 5, seed);
    EXPECT_LE(g.max_depth, 3u) << "seed " << seed;
  }
}

TEST(GridSearch, FullGridShape) {
  const auto e = metrics::full_estimator_grid();
  const auto d = metrics::full_depth_grid();
  EXPECT_EQ(e.size(), 401u);
  EXPECT_EQ(e.front(), 1000u);
  EXPECT_EQ(e.back(), 5000u);
  EXPECT_EQ(d.size(), 20u);
  EXPECT_EQ(d.back(), 40u);
}

TEST(StratifiedFolds, Balanced) {
  const auto y = concat(repeat(P, 23), repeat(N, 17));
  const auto f = metrics::stratified_folds(y, 5, 1);
  for (std::size_t k = 0; k < 5; ++k) {
    std::size_t pos = 0, neg = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (f[i] == k) (y[i] == P ? pos : neg)++;
    EXPECT_GE(pos, 4u);
    EXPECT_LE(pos, 5u);
    EXPECT_GE(neg, 3u);
    EXPECT_LE(neg, 4u);
  }
}
