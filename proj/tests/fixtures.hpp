// Shared helpers for the gradient-check fixtures.
#pragma once

#include <random>

#include "jmml/nn/dense.hpp"

namespace fixture {

// Fresh layers have zero biases, so a row whose upstream ReLUs are all off
// lands exactly on the next layer's kink, where a central difference and the
// subgradient disagree. Small random biases move the check point off it.
inline void jitter_biases(const jmml::nn::ParameterSet& params, std::uint64_t seed, double scale = 0.1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (const auto& l : params.layers())
    for (Eigen::Index i = 0; i < l->bias.size(); ++i) l->bias[i] = u(rng);
}

}  // namespace fixture
