#pragma once

// CART random forest for binary polarity labels: bootstrap samples, Gini
// splits over floor(sqrt(d)) random features per node, majority vote with
// ties resolved to '+'.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "jmml/error.hpp"
#include "jmml/nn/serialize.hpp"
#include "jmml/types.hpp"

namespace jmml::forest {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;   // x[feature] <= threshold
  int right = -1;  // x[feature] > threshold
  std::array<double, 2> votes{0.0, 0.0};  // class counts reaching the node
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  std::size_t max_depth = 0;

  Polarity predict(const double* row) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
      const TreeNode& n = nodes[i];
      i = static_cast<std::size_t>(row[n.feature] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].votes[0] > nodes[i].votes[1] ? Polarity::negative : Polarity::positive;
  }

  std::size_t depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t out = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      out = std::max(out, d[i]);
      if (nodes[i].feature >= 0) {
        d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
      }
    }
    return out;
  }
};

struct ForestOptions {
  std::size_t n_estimators = 100;
  std::size_t max_depth = 8;
  std::uint64_t seed = 0;
  bool bootstrap = true;
  std::size_t max_features = 0;  // 0 = floor(sqrt(d))
};

struct RandomForest {
  std::vector<DecisionTree> trees;
  ForestOptions options;
  std::size_t n_features = 0;
};

namespace detail {

inline double gini(double neg, double pos) {
  const double n = neg + pos;
  if (n <= 0.0) return 0.0;
  const double a = neg / n, b = pos / n;
  return 1.0 - a * a - b * b;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<Polarity>& y, std::size_t max_depth, std::size_t mtry, std::mt19937_64& rng)
      : x_(x), y_(y), max_depth_(max_depth), mtry_(mtry), rng_(rng) {
    features_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(features_.begin(), features_.end(), 0);
  }

  DecisionTree build(std::vector<std::size_t> samples) {
    tree_.max_depth = max_depth_;
    grow(samples, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t>& samples, std::size_t depth) {
    TreeNode node;
    for (std::size_t s : samples) node.votes[static_cast<std::size_t>(class_index(y_[s]))] += 1.0;
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(node);
    if (depth >= max_depth_ || samples.size() < 2 || node.votes[0] == 0.0 || node.votes[1] == 0.0) return id;

    // Partial Fisher-Yates: the first mtry entries are the sampled features.
    for (std::size_t i = 0; i < mtry_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, features_.size() - 1);
      std::swap(features_[i], features_[pick(rng_)]);
    }
    const double parent = gini(node.votes[0], node.votes[1]);
    const double total = static_cast<double>(samples.size());
    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, int>> column(samples.size());
    for (std::size_t f = 0; f < mtry_; ++f) {
      const auto feat = static_cast<Eigen::Index>(features_[f]);
      for (std::size_t i = 0; i < samples.size(); ++i)
        column[i] = {x_(static_cast<Eigen::Index>(samples[i]), feat), class_index(y_[samples[i]])};
      std::sort(column.begin(), column.end());
      std::array<double, 2> left{0.0, 0.0};
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        left[static_cast<std::size_t>(column[i].second)] += 1.0;
        if (column[i].first == column[i + 1].first) continue;
        const double nl = left[0] + left[1];
        const double nr = total - nl;
        const double child = (nl * gini(left[0], left[1]) + nr * gini(node.votes[0] - left[0], node.votes[1] - left[1])) / total;
        const double gain = parent - child;
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_feature = static_cast<int>(feat);
          best_threshold = 0.5 * (column[i].first + column[i + 1].first);
          if (!(best_threshold < column[i + 1].first)) best_threshold = column[i].first;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left_s, right_s;
    for (std::size_t s : samples)
      (x_(static_cast<Eigen::Index>(s), best_feature) <= best_threshold ? left_s : right_s).push_back(s);
    samples.clear();
    samples.shrink_to_fit();
    const int l = grow(left_s, depth + 1);
    const int r = grow(right_s, depth + 1);
    TreeNode& n = tree_.nodes[static_cast<std::size_t>(id)];
    n.feature = best_feature;
    n.threshold = best_threshold;
    n.left = l;
    n.right = r;
    return id;
  }

  const Matrix& x_;
  const std::vector<Polarity>& y_;
  std::size_t max_depth_;
  std::size_t mtry_;
  std::mt19937_64& rng_;
  std::vector<std::size_t> features_;
  DecisionTree tree_;
};

inline std::uint64_t tree_seed(std::uint64_t seed, std::size_t tree) { return derive_seed(seed, tree); }

}  // namespace detail

// Each tree draws from its own generator seeded by (seed, tree index), so
// trees are independent of fitting order.
inline RandomForest fit_rf(const Matrix& x, const std::vector<Polarity>& y, const ForestOptions& opt) {
  require_shape(static_cast<std::size_t>(x.rows()) == y.size(), "fit_rf: label count mismatch");
  require(x.rows() >= 2, "fit_rf: need at least 2 samples");
  require(x.cols() >= 1, "fit_rf: need at least 1 feature");
  require(opt.n_estimators >= 1, "fit_rf: n_estimators must be >= 1");
  require(x.allFinite(), "fit_rf: non-finite feature value");
  const bool has_pos = std::any_of(y.begin(), y.end(), [](Polarity p) { return p == Polarity::positive; });
  const bool has_neg = std::any_of(y.begin(), y.end(), [](Polarity p) { return p == Polarity::negative; });
  if (!has_pos || !has_neg) throw SingleClassError("fit_rf: both classes must be present");

  const auto d = static_cast<std::size_t>(x.cols());
  const std::size_t mtry = opt.max_features > 0
                               ? std::min(opt.max_features, d)
                               : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
  RandomForest forest;
  forest.options = opt;
  forest.n_features = d;
  const auto n = static_cast<std::size_t>(x.rows());
  for (std::size_t t = 0; t < opt.n_estimators; ++t) {
    std::mt19937_64 rng(detail::tree_seed(opt.seed, t));
    std::vector<std::size_t> samples(n);
    if (opt.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& s : samples) s = pick(rng);
    } else {
      std::iota(samples.begin(), samples.end(), 0);
    }
    detail::TreeBuilder builder(x, y, opt.max_depth, mtry, rng);
    forest.trees.push_back(builder.build(std::move(samples)));
  }
  return forest;
}

inline std::vector<Polarity> predict(const RandomForest& forest, const Matrix& x) {
  require_shape(static_cast<std::size_t>(x.cols()) == forest.n_features,
                "forest::predict: expected " + std::to_string(forest.n_features) + " features, got " + std::to_string(x.cols()));
  std::vector<Polarity> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double* row = x.data() + r * x.cols();
    std::size_t pos = 0;
    for (const auto& t : forest.trees) pos += t.predict(row) == Polarity::positive ? 1 : 0;
    out.push_back(2 * pos >= forest.trees.size() ? Polarity::positive : Polarity::negative);
  }
  return out;
}

inline nn::json to_json(const RandomForest& f) {
  nn::json trees = nn::json::array();
  for (const auto& t : f.trees) {
    nn::json nodes = nn::json::array();
    for (const auto& n : t.nodes)
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.votes[0], n.votes[1]});
    trees.push_back({{"max_depth", t.max_depth}, {"nodes", nodes}});
  }
  return nn::wrap_checkpoint("random_forest", {{"n_features", f.n_features},
                                               {"n_estimators", f.options.n_estimators},
                                               {"max_depth", f.options.max_depth},
                                               {"seed", f.options.seed},
                                               {"bootstrap", f.options.bootstrap},
                                               {"max_features", f.options.max_features},
                                               {"trees", trees}});
}

inline RandomForest forest_from_json(const nn::json& j) {
  const auto& p = nn::unwrap_checkpoint(j, "random_forest");
  RandomForest f;
  f.n_features = p.at("n_features").get<std::size_t>();
  f.options = {p.at("n_estimators").get<std::size_t>(), p.at("max_depth").get<std::size_t>(),
               p.at("seed").get<std::uint64_t>(), p.at("bootstrap").get<bool>(), p.at("max_features").get<std::size_t>()};
  for (const auto& tj : p.at("trees")) {
    DecisionTree t;
    t.max_depth = tj.at("max_depth").get<std::size_t>();
    for (const auto& nj : tj.at("nodes"))
      t.nodes.push_back({nj.at(0).get<int>(), nj.at(1).get<double>(), nj.at(2).get<int>(), nj.at(3).get<int>(),
                         {nj.at(4).get<double>(), nj.at(5).get<double>()}});
    f.trees.push_back(std::move(t));
  }
  return f;
}

}  // namespace jmml::forest
