#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "jmml/error.hpp"
#include "jmml/types.hpp"

namespace jmml::pipeline {

struct SplitSpec {
  double train_frac = 0.8;
  double val_frac_of_train = 0.1;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

inline std::array<std::vector<std::size_t>, 2> indices_by_class(const std::vector<Polarity>& labels) {
  std::array<std::vector<std::size_t>, 2> out;
  for (std::size_t i = 0; i < labels.size(); ++i) out[static_cast<std::size_t>(class_index(labels[i]))].push_back(i);
  return out;
}

// Per class: shuffle, hold out round(n * (1 - train_frac)) for test, then
// round(n_train * val_frac_of_train) of the remainder for validation.
inline SplitIndices stratified_split(const std::vector<Polarity>& labels, const SplitSpec& spec) {
  require(spec.train_frac > 0.0 && spec.train_frac < 1.0, "stratified_split: train_frac must be in (0, 1)");
  require(spec.val_frac_of_train >= 0.0 && spec.val_frac_of_train < 1.0, "stratified_split: val_frac_of_train must be in [0, 1)");
  auto by_class = indices_by_class(labels);
  for (const auto& c : by_class)
    require(c.size() >= 10, "stratified_split: too few samples (need at least 10 per class)");
  std::mt19937_64 rng(spec.seed);
  SplitIndices out;
  for (auto& idx : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::lround(static_cast<double>(idx.size()) * (1.0 - spec.train_frac)));
    const std::size_t n_train_full = idx.size() - n_test;
    const auto n_val = static_cast<std::size_t>(std::lround(static_cast<double>(n_train_full) * spec.val_frac_of_train));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (k < n_test) out.test.push_back(idx[k]);
      else if (k < n_test + n_val) out.val.push_back(idx[k]);
      else out.train.push_back(idx[k]);
    }
  }
  for (auto* v : {&out.train, &out.val, &out.test}) std::sort(v->begin(), v->end());
  return out;
}

// Minority class oversampling: returns every input index plus minority
// indices drawn with replacement until both classes have equal counts.
inline std::vector<std::size_t> mco_oversample(const std::vector<Polarity>& labels, std::uint64_t seed) {
  const auto by_class = indices_by_class(labels);
  if (by_class[0].empty() || by_class[1].empty()) throw SingleClassError("mco_oversample: both classes must be present");
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = i;
  const std::size_t minority = by_class[0].size() < by_class[1].size() ? 0 : 1;
  const auto& pool = by_class[minority];
  const std::size_t deficit = by_class[1 - minority].size() - pool.size();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (std::size_t k = 0; k < deficit; ++k) out.push_back(pool[pick(rng)]);
  return out;
}

// Oversamples each class (with replacement) up to target_counts[class];
// classes already at or above their target are kept unchanged.
inline std::vector<std::size_t> match_class_counts(const std::vector<Polarity>& labels,
                                                   const std::array<std::size_t, 2>& target_counts, std::uint64_t seed) {
  const auto by_class = indices_by_class(labels);
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& pool = by_class[c];
    if (pool.empty() || pool.size() >= target_counts[c]) continue;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (std::size_t k = pool.size(); k < target_counts[c]; ++k) out.push_back(pool[pick(rng)]);
  }
  return out;
}

inline std::array<std::size_t, 2> class_counts(const std::vector<Polarity>& labels) {
  std::array<std::size_t, 2> n{0, 0};
  for (Polarity p : labels) ++n[static_cast<std::size_t>(class_index(p))];
  return n;
}

// True when no test identifier appears among the training-side identifiers.
inline bool no_leakage(const std::vector<std::string>& test_ids, const std::vector<std::vector<std::string>>& train_side) {
  const std::set<std::string> test(test_ids.begin(), test_ids.end());
  for (const auto& ids : train_side)
    for (const auto& id : ids)
      if (test.count(id) != 0) return false;
  return true;
}

}  // namespace jmml::pipeline
