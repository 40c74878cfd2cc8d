#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "jmml/error.hpp"
#include "jmml/nn/dense.hpp"
#include "jmml/types.hpp"

namespace jmml::nn {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t skipped = 0;  // coordinates whose +-eps probe crossed a kink
};

// Central-difference check of `analytic` against loss(params) for every
// coordinate. Relative error is |a - n| / max(|a|, |n|, floor).
template <class LossFn>
GradCheckResult grad_check(LossFn&& loss, Vector params, const Vector& analytic, double eps = 1e-5,
                           double floor = 1e-6) {
  require_shape(params.size() == analytic.size(), "grad_check: gradient size mismatch");
  GradCheckResult worst;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + eps;
    const double up = loss(params);
    params[i] = saved - eps;
    const double down = loss(params);
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic[i];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
    if (rel > worst.max_relative_error || i == 0) {
      worst = {rel, static_cast<std::size_t>(i), a, numeric};
    }
  }
  return worst;
}

// Same check, but a coordinate is skipped when `pattern` (e.g. which ReLUs
// are on) differs between the base point and either probe: the central
// difference then straddles a kink and says nothing about the derivative.
template <class LossFn, class PatternFn>
GradCheckResult grad_check_piecewise(LossFn&& loss, PatternFn&& pattern, Vector params, const Vector& analytic,
                                     double eps = 1e-5, double floor = 1e-6) {
  require_shape(params.size() == analytic.size(), "grad_check: gradient size mismatch");
  const auto base = pattern(params);
  GradCheckResult worst;
  bool first = true;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + eps;
    const double up = loss(params);
    const bool same_up = pattern(params) == base;
    params[i] = saved - eps;
    const double down = loss(params);
    const bool same_down = pattern(params) == base;
    params[i] = saved;
    if (!same_up || !same_down) {
      ++worst.skipped;
      continue;
    }
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic[i];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
    if (rel > worst.max_relative_error || first) {
      const std::size_t skipped = worst.skipped;
      worst = {rel, static_cast<std::size_t>(i), a, numeric, skipped};
      first = false;
    }
  }
  return worst;
}

// Appends the on/off state of every ReLU unit in a forward pass.
inline void append_relu_pattern(const DenseNet& net, const ForwardCache& cache, std::vector<bool>& out) {
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    if (net.layers()[l]->activation != Activation::relu) continue;
    const Matrix& a = cache.activations[l];
    for (Eigen::Index k = 0; k < a.size(); ++k) out.push_back(a.data()[k] > 0.0);
  }
}

}  // namespace jmml::nn
