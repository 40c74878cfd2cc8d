#pragma once

// Extended deep canonically correlated cross-modal autoencoder for two
// modalities. Each modality has an encoder (3 ReLU hidden layers and a
// linear projection head) and a decoder fed by the encoder's last hidden
// layer, with two linear heads: self-reconstruction (s_rec) of its own input
// and cross-reconstruction (x_rec) of the other modality. Projections of the
// two modalities are coupled by the CCA loss; reconstructions use BCE on the
// sigmoid of the head outputs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "jmml/error.hpp"
#include "jmml/jecl.hpp"
#include "jmml/nn/adam.hpp"
#include "jmml/nn/dense.hpp"
#include "jmml/nn/losses.hpp"
#include "jmml/nn/serialize.hpp"
#include "jmml/types.hpp"

namespace jmml::edcc {

using nn::Activation;
using nn::DenseNet;

// Per-feature min-max scaling to [0, 1] fitted on training data. Constant
// features map to 0; out-of-range values are clamped.
struct MinMaxScaler {
  Vector min;
  Vector max;

  bool fitted() const { return min.size() > 0; }

  static MinMaxScaler fit(const Matrix& x) {
    require_shape(x.rows() >= 1, "MinMaxScaler: empty data");
    return {x.colwise().minCoeff().transpose(), x.colwise().maxCoeff().transpose()};
  }

  Matrix transform(const Matrix& x) const {
    if (!fitted()) return x;
    require_shape(x.cols() == min.size(), "MinMaxScaler: dim mismatch");
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double range = max[c] - min[c];
      for (Eigen::Index r = 0; r < x.rows(); ++r)
        out(r, c) = range > 0.0 ? std::clamp((x(r, c) - min[c]) / range, 0.0, 1.0) : 0.0;
    }
    return out;
  }

  Vector transform(const Vector& x) const { return transform(Matrix(x.transpose())).row(0).transpose(); }
};

struct ModalityNets {
  DenseNet encoder;     // input -> h1 -> h2 -> h3 (ReLU); h3 is the penultimate tap
  DenseNet projection;  // h3 -> projection_dim, linear
  DenseNet decoder;     // h3 -> h1 -> h2 -> h3 (ReLU)
  DenseNet self_head;   // -> own input dim, linear (logits)
  DenseNet cross_head;  // -> other input dim, linear (logits)
  MinMaxScaler scaler;
  std::size_t input_dim = 0;

  void add_to(nn::ParameterSet& p) const {
    p.add(encoder);
    p.add(projection);
    p.add(decoder);
    p.add(self_head);
    p.add(cross_head);
  }
};

struct LossWeights {
  double cca = 1.0;
  double srec = 1.0;
  double xrec = 1.0;
};

struct EdccCaeModel {
  std::array<ModalityNets, 2> modality;
  std::size_t projection_dim = 20;
  LossWeights weights{};
  double cca_reg = 1e-4;

  nn::ParameterSet parameters() const {
    nn::ParameterSet p;
    modality[0].add_to(p);
    modality[1].add_to(p);
    return p;
  }
};

// Hidden widths follow the JECL sizing scheme with w = round(width_factor *
// input_dim): setup1 [w, w, w], setup2 [w, w/2, w], setup3 [w, 2w, w].
inline EdccCaeModel build_edcc(const std::vector<std::size_t>& input_dims, double width_factor = 2.0,
                               std::size_t projection_dim = 20, jecl::Setup setup = jecl::Setup::setup3,
                               std::uint64_t seed = 0) {
  if (input_dims.size() != 2)
    throw UnsupportedConfiguration("build_edcc: exactly 2 modalities supported, got " + std::to_string(input_dims.size()));
  require(input_dims[0] >= 1 && input_dims[1] >= 1, "build_edcc: input dims must be >= 1");
  require(projection_dim >= 1, "build_edcc: projection_dim must be >= 1");
  require(width_factor > 0.0, "build_edcc: width_factor must be positive");
  EdccCaeModel model;
  model.projection_dim = projection_dim;
  std::mt19937_64 rng(seed);
  const auto relu3 = std::vector<Activation>(3, Activation::relu);
  for (std::size_t m = 0; m < 2; ++m) {
    const std::size_t n = input_dims[m];
    const std::size_t other = input_dims[1 - m];
    const std::size_t w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(width_factor * static_cast<double>(n))));
    const std::size_t mid = jecl::latent_width(setup, w);
    ModalityNets& net = model.modality[m];
    net.input_dim = n;
    net.encoder = DenseNet({n, w, mid, w}, relu3);
    net.projection = DenseNet({w, projection_dim}, {Activation::linear});
    net.decoder = DenseNet({w, w, mid, w}, relu3);
    net.self_head = DenseNet({w, n}, {Activation::linear});
    net.cross_head = DenseNet({w, other}, {Activation::linear});
    net.encoder.init(rng);
    net.projection.init(rng);
    net.decoder.init(rng);
    net.self_head.init(rng);
    net.cross_head.init(rng);
  }
  return model;
}

namespace detail {

struct ModalityPass {
  nn::ForwardCache encoder, projection, decoder, self_head, cross_head;
};

inline ModalityPass forward(const ModalityNets& net, const Matrix& x) {
  ModalityPass p;
  p.encoder = net.encoder.forward(x);
  p.projection = net.projection.forward(p.encoder.output());
  p.decoder = net.decoder.forward(p.encoder.output());
  p.self_head = net.self_head.forward(p.decoder.output());
  p.cross_head = net.cross_head.forward(p.decoder.output());
  return p;
}

inline void backward(ModalityNets& net, const ModalityPass& p, const Matrix* grad_projection, const Matrix& grad_self,
                     const Matrix& grad_cross) {
  Matrix g_dec = net.self_head.backward(p.self_head, grad_self);
  g_dec += net.cross_head.backward(p.cross_head, grad_cross);
  Matrix g_enc = net.decoder.backward(p.decoder, g_dec);
  if (grad_projection != nullptr) g_enc += net.projection.backward(p.projection, *grad_projection);
  net.encoder.backward(p.encoder, g_enc);
}

inline void check_unit_range(const Matrix& x, const char* what) {
  if (x.size() > 0 && (x.minCoeff() < 0.0 || x.maxCoeff() > 1.0))
    throw RangeError(std::string(what) + ": inputs must be scaled to [0, 1]");
}

}  // namespace detail

struct ObjectiveParts {
  double cca = 0.0;   // weighted -sum of canonical correlations
  double srec = 0.0;  // weighted sum over modalities of self BCE
  double xrec = 0.0;  // weighted sum over modalities of cross BCE
  double total = 0.0;
  Vector correlations;
};

// Full objective on paired rows x1[i] <-> x2[i]. With accumulate_grad the
// exact gradient is added to every layer's accumulator.
inline ObjectiveParts objective(EdccCaeModel& model, const Matrix& x1, const Matrix& x2, bool accumulate_grad = false) {
  if (x1.rows() != x2.rows()) throw PairingError("edcc objective: modalities have different sample counts");
  const std::array<const Matrix*, 2> x{&x1, &x2};
  std::array<detail::ModalityPass, 2> pass;
  for (std::size_t m = 0; m < 2; ++m) pass[m] = detail::forward(model.modality[m], *x[m]);

  ObjectiveParts parts;
  const LossWeights& w = model.weights;
  const nn::CcaReport cca =
      nn::loss_cca(pass[0].projection.output(), pass[1].projection.output(), model.cca_reg);
  parts.cca = w.cca * cca.value;
  parts.correlations = cca.correlations;
  std::array<nn::LossReport, 2> self, cross;
  for (std::size_t m = 0; m < 2; ++m) {
    self[m] = nn::loss_bce_logits(pass[m].self_head.output(), *x[m]);
    cross[m] = nn::loss_bce_logits(pass[m].cross_head.output(), *x[1 - m]);
    parts.srec += w.srec * self[m].value;
    parts.xrec += w.xrec * cross[m].value;
  }
  parts.total = parts.cca + parts.srec + parts.xrec;

  if (accumulate_grad) {
    const std::array<Matrix, 2> g_proj{w.cca * cca.grad_a, w.cca * cca.grad_b};
    for (std::size_t m = 0; m < 2; ++m)
      detail::backward(model.modality[m], pass[m], &g_proj[m], w.srec * self[m].grad, w.xrec * cross[m].grad);
  }
  return parts;
}

inline ObjectiveParts objective(const EdccCaeModel& model, const Matrix& x1, const Matrix& x2) {
  EdccCaeModel copy = model;
  return objective(copy, x1, x2, false);
}

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t patience = 20;
  std::size_t batch_size = 32;
  nn::AdamConfig adam{};
  std::uint64_t seed = 0;
};

struct EpochRecord {
  double cca = 0.0;
  double srec = 0.0;
  double xrec = 0.0;
  double total = 0.0;
  double mean_correlation = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> trace;
  std::vector<double> validation_loss;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
};

// Optional class labels switch pairing from by-index to by-label: every
// epoch each class's samples from both modalities are shuffled and zipped
// (the shorter list cycles), so paired rows always share a label.
struct PairingLabels {
  std::vector<int> modality1;
  std::vector<int> modality2;
};

namespace detail {

inline std::vector<std::pair<std::size_t, std::size_t>> make_pairs(std::size_t n1, std::size_t n2,
                                                                   const std::optional<PairingLabels>& labels,
                                                                   std::mt19937_64& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (!labels) {
    for (std::size_t i = 0; i < n1; ++i) pairs.emplace_back(i, i);
    return pairs;
  }
  if (labels->modality1.size() != n1 || labels->modality2.size() != n2)
    throw PairingError("edcc: label count does not match sample count");
  int max_label = 0;
  for (int l : labels->modality1) max_label = std::max(max_label, l);
  for (int l : labels->modality2) max_label = std::max(max_label, l);
  for (int c = 0; c <= max_label; ++c) {
    std::vector<std::size_t> a, b;
    for (std::size_t i = 0; i < n1; ++i)
      if (labels->modality1[i] == c) a.push_back(i);
    for (std::size_t i = 0; i < n2; ++i)
      if (labels->modality2[i] == c) b.push_back(i);
    if (a.empty() && b.empty()) continue;
    if (a.empty() || b.empty())
      throw PairingError("edcc: class " + std::to_string(c) + " present in only one modality");
    std::shuffle(a.begin(), a.end(), rng);
    std::shuffle(b.begin(), b.end(), rng);
    const std::size_t count = std::max(a.size(), b.size());
    for (std::size_t i = 0; i < count; ++i) pairs.emplace_back(a[i % a.size()], b[i % b.size()]);
  }
  return pairs;
}

}  // namespace detail

// Each epoch: mini-batch Adam steps on the reconstruction terms, then one
// Adam step on the CCA term computed from the projections of all paired
// rows (CCA needs whole-sample covariances; a batch of 32 cannot support 20
// components). The CCA step touches only encoders and projection heads. The
// recorded trace is the full objective after each epoch.
inline TrainResult train_edcc(EdccCaeModel& model, const Matrix& x1, const Matrix& x2, const TrainConfig& cfg,
                              const std::optional<PairingLabels>& labels = std::nullopt,
                              const Matrix* val1 = nullptr, const Matrix* val2 = nullptr) {
  if (!labels && x1.rows() != x2.rows())
    throw PairingError("train_edcc: index pairing needs equal sample counts in both modalities");
  require_shape(static_cast<std::size_t>(x1.cols()) == model.modality[0].input_dim, "train_edcc: modality 1 dim");
  require_shape(static_cast<std::size_t>(x2.cols()) == model.modality[1].input_dim, "train_edcc: modality 2 dim");
  detail::check_unit_range(x1, "train_edcc");
  detail::check_unit_range(x2, "train_edcc");
  require(cfg.batch_size >= 1, "train_edcc: batch_size must be >= 1");
  const bool use_validation = val1 != nullptr && val2 != nullptr && static_cast<std::size_t>(val1->rows()) > model.projection_dim &&
                              val1->rows() == val2->rows();
  if (use_validation) {
    detail::check_unit_range(*val1, "train_edcc validation");
    detail::check_unit_range(*val2, "train_edcc validation");
  }

  std::mt19937_64 rng(cfg.seed);
  // Projection heads only see the CCA term, decoders only the reconstruction
  // terms; keeping them out of the other step stops Adam momentum leaking.
  nn::ParameterSet params = model.parameters();
  nn::ParameterSet rec_params, cca_params;
  for (const auto& net : model.modality) {
    rec_params.add(net.encoder);
    rec_params.add(net.decoder);
    rec_params.add(net.self_head);
    rec_params.add(net.cross_head);
    cca_params.add(net.encoder);
    cca_params.add(net.projection);
  }
  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  Vector best_params;
  std::size_t since_best = 0;
  const LossWeights& w = model.weights;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto pairs = detail::make_pairs(static_cast<std::size_t>(x1.rows()), static_cast<std::size_t>(x2.rows()), labels, rng);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    std::vector<std::size_t> i1, i2;
    for (const auto& [a, b] : pairs) {
      i1.push_back(a);
      i2.push_back(b);
    }
    const Matrix p1 = take_rows(x1, i1);
    const Matrix p2 = take_rows(x2, i2);

    for (std::size_t start = 0; start < pairs.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, pairs.size() - start);
      const Matrix b1 = p1.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len));
      const Matrix b2 = p2.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len));
      params.zero_grad();
      const auto f1 = detail::forward(model.modality[0], b1);
      const auto f2 = detail::forward(model.modality[1], b2);
      const auto s1 = nn::loss_bce_logits(f1.self_head.output(), b1);
      const auto c1 = nn::loss_bce_logits(f1.cross_head.output(), b2);
      const auto s2 = nn::loss_bce_logits(f2.self_head.output(), b2);
      const auto c2 = nn::loss_bce_logits(f2.cross_head.output(), b1);
      detail::backward(model.modality[0], f1, nullptr, w.srec * s1.grad, w.xrec * c1.grad);
      detail::backward(model.modality[1], f2, nullptr, w.srec * s2.grad, w.xrec * c2.grad);
      nn::adam_step(rec_params, cfg.adam);
    }

    if (w.cca != 0.0) {
      params.zero_grad();
      std::array<nn::ForwardCache, 2> enc, proj;
      const std::array<const Matrix*, 2> full{&p1, &p2};
      for (std::size_t m = 0; m < 2; ++m) {
        enc[m] = model.modality[m].encoder.forward(*full[m]);
        proj[m] = model.modality[m].projection.forward(enc[m].output());
      }
      const nn::CcaReport cca = nn::loss_cca(proj[0].output(), proj[1].output(), model.cca_reg);
      const std::array<Matrix, 2> g{w.cca * cca.grad_a, w.cca * cca.grad_b};
      for (std::size_t m = 0; m < 2; ++m)
        model.modality[m].encoder.backward(enc[m], model.modality[m].projection.backward(proj[m], g[m]));
      nn::adam_step(cca_params, cfg.adam);
    }

    const ObjectiveParts parts = objective(model, p1, p2, false);
    if (!std::isfinite(parts.total)) throw NumericalError("train_edcc: loss diverged");
    result.trace.push_back({parts.cca, parts.srec, parts.xrec, parts.total,
                            parts.correlations.size() > 0 ? parts.correlations.mean() : 0.0});
    result.epochs_run = epoch + 1;

    if (use_validation) {
      const double v = objective(model, *val1, *val2, false).total;
      result.validation_loss.push_back(v);
      if (v < best) {
        best = v;
        best_params = params.values();
        result.best_epoch = epoch + 1;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        break;
      }
    } else {
      result.best_epoch = epoch + 1;
    }
  }
  if (use_validation && best_params.size() > 0) params.set_values(best_params);
  return result;
}

struct InferenceResult {
  Vector s_rec;       // own-modality reconstruction, in [0, 1]
  Vector x_rec;       // mapping into the other modality, in [0, 1]
  Vector encoded;     // penultimate encoder layer
  Vector projection;  // CCA head
};

// Uses only modality m's encoder and decoder; x must already be scaled.
inline InferenceResult infer_single(const EdccCaeModel& model, std::size_t m, const Vector& x) {
  require(m < 2, "infer_single: modality index must be 0 or 1");
  const ModalityNets& net = model.modality[m];
  require_shape(static_cast<std::size_t>(x.size()) == net.input_dim,
                "infer_single: input dim " + std::to_string(x.size()) + ", expected " + std::to_string(net.input_dim));
  if (x.size() > 0 && (x.minCoeff() < 0.0 || x.maxCoeff() > 1.0)) throw RangeError("infer_single: x must lie in [0, 1]");
  const auto pass = detail::forward(net, Matrix(x.transpose()));
  auto sigmoid = [](const Matrix& z) { return nn::apply_activation(Activation::sigmoid, z); };
  InferenceResult r;
  r.s_rec = sigmoid(pass.self_head.output()).row(0).transpose();
  r.x_rec = sigmoid(pass.cross_head.output()).row(0).transpose();
  r.encoded = pass.encoder.output().row(0).transpose();
  r.projection = pass.projection.output().row(0).transpose();
  return r;
}

// Batch s_rec for already scaled rows.
inline Matrix self_reconstruction(const EdccCaeModel& model, std::size_t m, const Matrix& x_scaled) {
  require(m < 2, "self_reconstruction: modality index must be 0 or 1");
  const ModalityNets& net = model.modality[m];
  require_shape(static_cast<std::size_t>(x_scaled.cols()) == net.input_dim, "self_reconstruction: input dim");
  const Matrix logits = net.self_head.predict(net.decoder.predict(net.encoder.predict(x_scaled)));
  return nn::apply_activation(Activation::sigmoid, logits);
}

// [x, s_rec(scale(x))]: the unscaled input followed by its self-reconstruction.
inline Vector classifier_features(const EdccCaeModel& model, std::size_t m, const Vector& x) {
  require(m < 2, "classifier_features: modality index must be 0 or 1");
  require_shape(static_cast<std::size_t>(x.size()) == model.modality[m].input_dim, "classifier_features: input dim");
  const Vector scaled = model.modality[m].scaler.transform(x);
  const InferenceResult r = infer_single(model, m, scaled);
  Vector out(x.size() + r.s_rec.size());
  out << x, r.s_rec;
  return out;
}

inline Matrix classifier_features(const EdccCaeModel& model, std::size_t m, const Matrix& x) {
  require(m < 2, "classifier_features: modality index must be 0 or 1");
  require_shape(static_cast<std::size_t>(x.cols()) == model.modality[m].input_dim, "classifier_features: input dim");
  return hconcat(x, self_reconstruction(model, m, model.modality[m].scaler.transform(x)));
}

inline nn::json to_json(const EdccCaeModel& model) {
  nn::json mods = nn::json::array();
  for (const auto& net : model.modality) {
    nn::json scaler = nullptr;
    if (net.scaler.fitted()) scaler = {{"min", nn::vector_to_json(net.scaler.min)}, {"max", nn::vector_to_json(net.scaler.max)}};
    mods.push_back({{"input_dim", net.input_dim},
                    {"encoder", nn::net_to_json(net.encoder)},
                    {"projection", nn::net_to_json(net.projection)},
                    {"decoder", nn::net_to_json(net.decoder)},
                    {"self_head", nn::net_to_json(net.self_head)},
                    {"cross_head", nn::net_to_json(net.cross_head)},
                    {"scaler", scaler}});
  }
  return nn::wrap_checkpoint("edcc_cae", {{"projection_dim", model.projection_dim},
                                          {"cca_reg", model.cca_reg},
                                          {"loss_weights",
                                           {{"cca", model.weights.cca}, {"srec", model.weights.srec}, {"xrec", model.weights.xrec}}},
                                          {"modalities", mods}});
}

inline EdccCaeModel edcc_from_json(const nn::json& j) {
  const auto& p = nn::unwrap_checkpoint(j, "edcc_cae");
  EdccCaeModel model;
  model.projection_dim = p.at("projection_dim").get<std::size_t>();
  model.cca_reg = p.at("cca_reg").get<double>();
  const auto& lw = p.at("loss_weights");
  model.weights = {lw.at("cca").get<double>(), lw.at("srec").get<double>(), lw.at("xrec").get<double>()};
  const auto& mods = p.at("modalities");
  if (mods.size() != 2) throw FormatError("edcc checkpoint: expected 2 modalities");
  for (std::size_t m = 0; m < 2; ++m) {
    const auto& mj = mods.at(m);
    ModalityNets& net = model.modality[m];
    net.input_dim = mj.at("input_dim").get<std::size_t>();
    net.encoder = nn::net_from_json(mj.at("encoder"));
    net.projection = nn::net_from_json(mj.at("projection"));
    net.decoder = nn::net_from_json(mj.at("decoder"));
    net.self_head = nn::net_from_json(mj.at("self_head"));
    net.cross_head = nn::net_from_json(mj.at("cross_head"));
    if (!mj.at("scaler").is_null())
      net.scaler = {nn::vector_from_json(mj.at("scaler").at("min")), nn::vector_from_json(mj.at("scaler").at("max"))};
  }
  return model;
}

}  // namespace jmml::edcc
