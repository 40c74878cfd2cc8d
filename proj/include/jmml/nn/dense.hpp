#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "jmml/error.hpp"
#include "jmml/types.hpp"

namespace jmml::nn {

enum class Activation { relu, linear, sigmoid };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::linear: return "linear";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

inline Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "linear") return Activation::linear;
  if (s == "sigmoid") return Activation::sigmoid;
  throw FormatError("unknown activation '" + std::string(s) + "'");
}

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment estimates for one layer plus its step counter.
struct AdamState {
  Matrix m_weight, v_weight;
  Vector m_bias, v_bias;
  std::size_t step = 0;
};

// One fully connected layer: y = act(x * weight + bias), x is batch x in.
struct DenseLayer {
  Matrix weight;  // in x out
  Vector bias;    // out
  Activation activation = Activation::linear;

  Matrix grad_weight;
  Vector grad_bias;
  AdamState adam;

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out, Activation act)
      : weight(Matrix::Zero(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out))),
        bias(Vector::Zero(static_cast<Eigen::Index>(out))),
        activation(act) {
    zero_grad();
  }

  std::size_t in_dim() const { return static_cast<std::size_t>(weight.rows()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t parameter_count() const { return static_cast<std::size_t>(weight.size() + bias.size()); }

  void zero_grad() {
    grad_weight = Matrix::Zero(weight.rows(), weight.cols());
    grad_bias = Vector::Zero(bias.size());
  }

  // Glorot-uniform weights, zero bias.
  void init_uniform(std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in_dim() + out_dim()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index i = 0; i < weight.size(); ++i) weight.data()[i] = dist(rng);
    bias.setZero();
  }
};

// Shared ownership is how a layer is tied across networks: every holder
// reads and updates the same parameters and the same gradient accumulator.
using SharedLayerHandle = std::shared_ptr<DenseLayer>;

inline SharedLayerHandle make_layer(std::size_t in, std::size_t out, Activation act) {
  return std::make_shared<DenseLayer>(in, out, act);
}

inline Matrix apply_activation(Activation act, const Matrix& z) {
  switch (act) {
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::linear: return z;
    case Activation::sigmoid: return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  }
  return z;
}

// Pre-activation values for every layer plus the network input.
struct ForwardCache {
  std::vector<Matrix> inputs;       // inputs[i] feeds layer i
  std::vector<Matrix> activations;  // activations[i] is layer i's output
  const Matrix& output() const { return activations.back(); }
};

class DenseNet {
 public:
  DenseNet() = default;

  explicit DenseNet(std::vector<SharedLayerHandle> layers) : layers_(std::move(layers)) { check_chain(); }

  // Builds fresh layers with dims[0] -> dims[1] -> ... using one activation per transition.
  DenseNet(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts) {
    require(dims.size() >= 2 && acts.size() + 1 == dims.size(), "DenseNet: dims/activations mismatch");
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) layers_.push_back(make_layer(dims[i], dims[i + 1], acts[i]));
  }

  // Copies are deep; tied layers are re-tied only by the owning model.
  DenseNet(const DenseNet& other) {
    for (const auto& l : other.layers_) layers_.push_back(std::make_shared<DenseLayer>(*l));
  }
  DenseNet& operator=(const DenseNet& other) {
    if (this != &other) {
      DenseNet tmp(other);
      layers_ = std::move(tmp.layers_);
    }
    return *this;
  }
  DenseNet(DenseNet&&) noexcept = default;
  DenseNet& operator=(DenseNet&&) noexcept = default;

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front()->in_dim(); }
  std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back()->out_dim(); }
  std::size_t depth() const { return layers_.size(); }

  const std::vector<SharedLayerHandle>& layers() const { return layers_; }
  SharedLayerHandle& layer(std::size_t i) { return layers_.at(i); }
  const SharedLayerHandle& layer(std::size_t i) const { return layers_.at(i); }

  void init(std::mt19937_64& rng) {
    for (auto& l : layers_) l->init_uniform(rng);
  }

  ForwardCache forward(const Matrix& batch) const {
    require_shape(!layers_.empty(), "DenseNet: empty network");
    require_shape(static_cast<std::size_t>(batch.cols()) == input_dim(),
                  "DenseNet: input has " + std::to_string(batch.cols()) + " columns, expected " +
                      std::to_string(input_dim()));
    ForwardCache cache;
    cache.inputs.reserve(layers_.size());
    cache.activations.reserve(layers_.size());
    const Matrix* x = &batch;
    for (const auto& l : layers_) {
      cache.inputs.push_back(*x);
      Matrix z = (*x) * l->weight;
      z.rowwise() += l->bias.transpose();
      cache.activations.push_back(apply_activation(l->activation, z));
      x = &cache.activations.back();
    }
    return cache;
  }

  Matrix predict(const Matrix& batch) const { return forward(batch).output(); }

  // Accumulates parameter gradients for d(loss)/d(output) = grad_out and
  // returns d(loss)/d(input).
  Matrix backward(const ForwardCache& cache, const Matrix& grad_out) {
    require_shape(cache.activations.size() == layers_.size(), "DenseNet::backward: cache from another network");
    Matrix g = grad_out;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      DenseLayer& l = *layers_[i];
      const Matrix& y = cache.activations[i];
      switch (l.activation) {
        case Activation::relu: g = (y.array() > 0.0).select(g, 0.0); break;
        case Activation::linear: break;
        case Activation::sigmoid: g = g.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())); break;
      }
      l.grad_weight.noalias() += cache.inputs[i].transpose() * g;
      l.grad_bias += g.colwise().sum().transpose();
      g = g * l.weight.transpose();
    }
    return g;
  }

  void zero_grad() {
    for (auto& l : layers_) l->zero_grad();
  }

 private:
  void check_chain() const {
    for (std::size_t i = 1; i < layers_.size(); ++i)
      require_shape(layers_[i - 1]->out_dim() == layers_[i]->in_dim(), "DenseNet: layer dims do not chain");
  }

  std::vector<SharedLayerHandle> layers_;
};

// Distinct layers across one or more networks, in first-seen order. Used to
// flatten parameters for optimizers, snapshots and gradient checks.
class ParameterSet {
 public:
  ParameterSet() = default;

  void add(const DenseNet& net) {
    for (const auto& l : net.layers()) add(l);
  }
  void add(const SharedLayerHandle& l) {
    for (const auto& existing : layers_)
      if (existing.get() == l.get()) return;
    layers_.push_back(l);
  }

  const std::vector<SharedLayerHandle>& layers() const { return layers_; }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l->parameter_count();
    return n;
  }

  Vector values() const {
    Vector out(static_cast<Eigen::Index>(size()));
    Eigen::Index pos = 0;
    for (const auto& l : layers_) {
      out.segment(pos, l->weight.size()) = Eigen::Map<const Vector>(l->weight.data(), l->weight.size());
      pos += l->weight.size();
      out.segment(pos, l->bias.size()) = l->bias;
      pos += l->bias.size();
    }
    return out;
  }

  void set_values(const Vector& v) {
    require_shape(static_cast<std::size_t>(v.size()) == size(), "ParameterSet: size mismatch");
    Eigen::Index pos = 0;
    for (const auto& l : layers_) {
      Eigen::Map<Vector>(l->weight.data(), l->weight.size()) = v.segment(pos, l->weight.size());
      pos += l->weight.size();
      l->bias = v.segment(pos, l->bias.size());
      pos += l->bias.size();
    }
  }

  Vector gradients() const {
    Vector out(static_cast<Eigen::Index>(size()));
    Eigen::Index pos = 0;
    for (const auto& l : layers_) {
      out.segment(pos, l->grad_weight.size()) = Eigen::Map<const Vector>(l->grad_weight.data(), l->grad_weight.size());
      pos += l->grad_weight.size();
      out.segment(pos, l->grad_bias.size()) = l->grad_bias;
      pos += l->grad_bias.size();
    }
    return out;
  }

  void zero_grad() {
    for (auto& l : layers_) l->zero_grad();
  }

 private:
  std::vector<SharedLayerHandle> layers_;
};

}  // namespace jmml::nn
