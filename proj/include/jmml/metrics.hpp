#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "jmml/error.hpp"
#include "jmml/forest.hpp"
#include "jmml/nn/serialize.hpp"
#include "jmml/types.hpp"

namespace jmml::metrics {

enum class F1Average { macro, weighted, positive };

inline std::string_view to_string(F1Average a) {
  switch (a) {
    case F1Average::macro: return "macro";
    case F1Average::weighted: return "weighted";
    case F1Average::positive: return "positive";
  }
  return "?";
}

inline F1Average parse_f1_average(std::string_view s) {
  if (s == "macro") return F1Average::macro;
  if (s == "weighted") return F1Average::weighted;
  if (s == "positive") return F1Average::positive;
  throw InvalidArgument("unknown F1 average '" + std::string(s) + "'");
}

struct EvalReport {
  double accuracy = 0.0;  // percent
  double f1 = 0.0;        // percent
  // confusion[true][predicted], index 0 = '-', 1 = '+'
  std::array<std::array<std::size_t, 2>, 2> confusion{};
};

namespace detail {

// F1 of one class; 0 when the class is neither predicted nor present.
inline double class_f1(const std::array<std::array<std::size_t, 2>, 2>& cm, std::size_t c) {
  const double tp = static_cast<double>(cm[c][c]);
  const double fp = static_cast<double>(cm[1 - c][c]);
  const double fn = static_cast<double>(cm[c][1 - c]);
  const double denom = 2.0 * tp + fp + fn;
  return denom > 0.0 ? 2.0 * tp / denom : 0.0;
}

}  // namespace detail

inline EvalReport report_from_confusion(const std::array<std::array<std::size_t, 2>, 2>& cm,
                                        F1Average average = F1Average::macro) {
  EvalReport r;
  r.confusion = cm;
  const double total = static_cast<double>(cm[0][0] + cm[0][1] + cm[1][0] + cm[1][1]);
  require(total > 0.0, "evaluate: no samples");
  r.accuracy = 100.0 * static_cast<double>(cm[0][0] + cm[1][1]) / total;
  const double f0 = detail::class_f1(cm, 0), f1 = detail::class_f1(cm, 1);
  switch (average) {
    case F1Average::macro: r.f1 = 100.0 * (f0 + f1) / 2.0; break;
    case F1Average::weighted: {
      const double s0 = static_cast<double>(cm[0][0] + cm[0][1]), s1 = static_cast<double>(cm[1][0] + cm[1][1]);
      r.f1 = 100.0 * (s0 * f0 + s1 * f1) / total;
      break;
    }
    case F1Average::positive: r.f1 = 100.0 * f1; break;
  }
  return r;
}

inline EvalReport evaluate(const std::vector<Polarity>& y_true, const std::vector<Polarity>& y_pred,
                           F1Average average = F1Average::macro) {
  if (y_true.size() != y_pred.size()) throw ShapeError("evaluate: label vectors differ in length");
  require(!y_true.empty(), "evaluate: no samples");
  std::array<std::array<std::size_t, 2>, 2> cm{};
  for (std::size_t i = 0; i < y_true.size(); ++i)
    ++cm[static_cast<std::size_t>(class_index(y_true[i]))][static_cast<std::size_t>(class_index(y_pred[i]))];
  return report_from_confusion(cm, average);
}

inline nn::json to_json(const EvalReport& r) {
  return {{"accuracy", r.accuracy},
          {"f1", r.f1},
          {"confusion", {{r.confusion[0][0], r.confusion[0][1]}, {r.confusion[1][0], r.confusion[1][1]}}}};
}

// Stratified fold assignment: each class is shuffled and dealt round-robin.
inline std::vector<std::size_t> stratified_folds(const std::vector<Polarity>& y, std::size_t folds, std::uint64_t seed) {
  std::vector<std::size_t> fold(y.size(), 0);
  std::mt19937_64 rng(seed);
  for (int c = 0; c < 2; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (class_index(y[i]) == c) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < idx.size(); ++k) fold[idx[k]] = k % folds;
  }
  return fold;
}

struct GridResult {
  std::size_t n_estimators = 0;
  std::size_t max_depth = 0;
  double cv_f1 = 0.0;  // stays 0 for a one-point grid (CV skipped)
};

// The full grid (10*i for 100 <= i <= 500 trees, depth 2*i for 1 <= i <= 20).
inline std::vector<std::size_t> full_estimator_grid() {
  std::vector<std::size_t> g;
  for (std::size_t i = 100; i <= 500; ++i) g.push_back(10 * i);
  return g;
}

inline std::vector<std::size_t> full_depth_grid() {
  std::vector<std::size_t> g;
  for (std::size_t i = 1; i <= 20; ++i) g.push_back(2 * i);
  return g;
}

// Best mean cross-validated F1; ties go to fewer trees, then shallower depth.
inline GridResult grid_search(const Matrix& x, const std::vector<Polarity>& y, std::vector<std::size_t> estimators,
                              std::vector<std::size_t> depths, std::size_t folds = 5, std::uint64_t seed = 0,
                              F1Average average = F1Average::macro) {
  require(!estimators.empty() && !depths.empty(), "grid_search: empty grid");
  require(folds >= 2, "grid_search: need at least 2 folds");
  std::sort(estimators.begin(), estimators.end());
  estimators.erase(std::unique(estimators.begin(), estimators.end()), estimators.end());
  std::sort(depths.begin(), depths.end());
  depths.erase(std::unique(depths.begin(), depths.end()), depths.end());
  if (estimators.size() == 1 && depths.size() == 1) return {estimators[0], depths[0], 0.0};

  const auto fold = stratified_folds(y, folds, seed);
  struct Split {
    Matrix xtr, xte;
    std::vector<Polarity> ytr, yte;
  };
  std::vector<Split> splits;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < y.size(); ++i) (fold[i] == f ? te : tr).push_back(i);
    if (te.empty()) continue;
    Split s{take_rows(x, tr), take_rows(x, te), {}, {}};
    for (std::size_t i : tr) s.ytr.push_back(y[i]);
    for (std::size_t i : te) s.yte.push_back(y[i]);
    splits.push_back(std::move(s));
  }

  GridResult best{0, 0, -1.0};
  for (std::size_t ne : estimators) {
    for (std::size_t depth : depths) {
      double score = 0.0;
      for (const auto& s : splits) {
        const auto rf = forest::fit_rf(s.xtr, s.ytr, {ne, depth, seed, true, 0});
        score += evaluate(s.yte, forest::predict(rf, s.xte), average).f1;
      }
      score /= static_cast<double>(splits.size());
      if (score > best.cv_f1 + 1e-12) best = {ne, depth, score};
    }
  }
  return best;
}

}  // namespace jmml::metrics
