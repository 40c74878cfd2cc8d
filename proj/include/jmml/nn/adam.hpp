#pragma once

#include <cmath>
#include <cstddef>

#include "jmml/error.hpp"
#include "jmml/nn/dense.hpp"

namespace jmml::nn {

// One bias-corrected Adam update of `param` in place. `step` is the 1-based
// index of this update.
template <class Param, class Grad, class Moment>
void adam_update(Param& param, const Grad& grad, Moment& m, Moment& v, std::size_t step, const AdamConfig& cfg) {
  if (!grad.allFinite()) throw NumericalError("adam: non-finite gradient");
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  param.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.epsilon);
}

// Applies the layer's accumulated gradient and clears it.
inline void adam_step(DenseLayer& layer, const AdamConfig& cfg) {
  AdamState& s = layer.adam;
  if (s.step == 0) {
    s.m_weight = Matrix::Zero(layer.weight.rows(), layer.weight.cols());
    s.v_weight = s.m_weight;
    s.m_bias = Vector::Zero(layer.bias.size());
    s.v_bias = s.m_bias;
  }
  ++s.step;
  adam_update(layer.weight, layer.grad_weight, s.m_weight, s.v_weight, s.step, cfg);
  adam_update(layer.bias, layer.grad_bias, s.m_bias, s.v_bias, s.step, cfg);
  layer.zero_grad();
}

inline void adam_step(const ParameterSet& params, const AdamConfig& cfg) {
  for (const auto& l : params.layers()) adam_step(*l, cfg);
}

}  // namespace jmml::nn
