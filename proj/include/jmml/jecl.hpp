#pragma once

// Joint emotion class learning: one emotion block per class, each with an
// independent autoencoder branch and a similarity branch whose latent layer
// is tied across all blocks. Block outputs (the two decoded branches fused
// by a linear layer) form the per-class joint embeddings.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "jmml/error.hpp"
#include "jmml/nn/adam.hpp"
#include "jmml/nn/dense.hpp"
#include "jmml/nn/losses.hpp"
#include "jmml/nn/serialize.hpp"
#include "jmml/types.hpp"

namespace jmml::jecl {

using nn::Activation;
using nn::DenseNet;
using nn::SharedLayerHandle;

// Latent width relative to the encoder/decoder width: equal, half, double.
enum class Setup { setup1, setup2, setup3 };

inline std::string_view to_string(Setup s) {
  switch (s) {
    case Setup::setup1: return "setup1";
    case Setup::setup2: return "setup2";
    case Setup::setup3: return "setup3";
  }
  return "?";
}

inline Setup parse_setup(std::string_view s) {
  if (s == "setup1") return Setup::setup1;
  if (s == "setup2") return Setup::setup2;
  if (s == "setup3") return Setup::setup3;
  throw InvalidArgument("unknown setup '" + std::string(s) + "'");
}

inline std::size_t latent_width(Setup s, std::size_t width) {
  switch (s) {
    case Setup::setup1: return width;
    case Setup::setup2: return std::max<std::size_t>(1, width / 2);
    case Setup::setup3: return 2 * width;
  }
  return width;
}

struct EmotionBlock {
  DenseNet ind;   // E_ind -> L_ind -> D_ind
  DenseNet sim;   // E_sim -> L_sim (tied) -> D_sim
  DenseNet fuse;  // concat(D_ind, D_sim) -> N, linear
  int class_id = 0;
  Vector centroid;
};

struct JeclModel {
  std::vector<EmotionBlock> blocks;
  SharedLayerHandle shared_latent;
  std::size_t input_dim = 0;
  std::size_t width = 0;  // E and D units
  Setup setup = Setup::setup3;

  JeclModel() = default;
  JeclModel(const JeclModel& other) { *this = other; }
  JeclModel& operator=(const JeclModel& other) {
    if (this == &other) return *this;
    blocks = other.blocks;  // DenseNet copies are deep
    input_dim = other.input_dim;
    width = other.width;
    setup = other.setup;
    shared_latent = other.shared_latent ? std::make_shared<nn::DenseLayer>(*other.shared_latent) : nullptr;
    for (auto& b : blocks) b.sim.layer(1) = shared_latent;
    return *this;
  }
  JeclModel(JeclModel&&) noexcept = default;
  JeclModel& operator=(JeclModel&&) noexcept = default;

  std::size_t num_classes() const { return blocks.size(); }

  // Every distinct layer once, shared latent included.
  nn::ParameterSet parameters() const {
    nn::ParameterSet p;
    for (const auto& b : blocks) {
      p.add(b.ind);
      p.add(b.sim);
      p.add(b.fuse);
    }
    return p;
  }

  nn::ParameterSet block_parameters(std::size_t j) const {
    nn::ParameterSet p;
    p.add(blocks.at(j).ind);
    p.add(blocks.at(j).sim);
    p.add(blocks.at(j).fuse);
    return p;
  }
};

// Widths: E and D get round(width_factor * N) units, L follows `setup`,
// fuse maps 2*width -> N. Default: setup3 with 2N.
inline JeclModel build_jecl(std::size_t input_dim, std::size_t num_classes, Setup setup = Setup::setup3,
                            double width_factor = 2.0, std::uint64_t seed = 0) {
  require(input_dim >= 1, "build_jecl: input_dim must be >= 1");
  require(num_classes >= 2, "build_jecl: need at least 2 classes");
  require(width_factor > 0.0, "build_jecl: width_factor must be positive");
  JeclModel model;
  model.input_dim = input_dim;
  model.setup = setup;
  model.width = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(width_factor * static_cast<double>(input_dim))));
  const std::size_t w = model.width;
  const std::size_t l = latent_width(setup, w);

  std::mt19937_64 rng(seed);
  model.shared_latent = nn::make_layer(w, l, Activation::relu);
  model.shared_latent->init_uniform(rng);
  for (std::size_t j = 0; j < num_classes; ++j) {
    EmotionBlock b;
    b.class_id = static_cast<int>(j);
    b.ind = DenseNet({input_dim, w, l, w}, {Activation::relu, Activation::relu, Activation::relu});
    b.ind.init(rng);
    b.sim = DenseNet({nn::make_layer(input_dim, w, Activation::relu), model.shared_latent,
                      nn::make_layer(l, w, Activation::relu)});
    b.sim.layer(0)->init_uniform(rng);
    b.sim.layer(2)->init_uniform(rng);
    b.fuse = DenseNet({2 * w, input_dim}, {Activation::linear});
    b.fuse.init(rng);
    model.blocks.push_back(std::move(b));
  }
  return model;
}

namespace detail {

struct BlockPass {
  nn::ForwardCache ind, sim, fuse;
};

inline BlockPass block_forward(const EmotionBlock& b, const Matrix& x) {
  BlockPass p;
  p.ind = b.ind.forward(x);
  p.sim = b.sim.forward(x);
  p.fuse = b.fuse.forward(hconcat(p.ind.output(), p.sim.output()));
  return p;
}

inline void block_backward(EmotionBlock& b, const BlockPass& p, const Matrix& grad_out) {
  const Matrix g = b.fuse.backward(p.fuse, grad_out);
  const Eigen::Index w = p.ind.output().cols();
  b.ind.backward(p.ind, g.leftCols(w));
  b.sim.backward(p.sim, g.rightCols(g.cols() - w));
}

}  // namespace detail

// Block output for every row of x.
inline Matrix block_output(const EmotionBlock& b, const Matrix& x) { return detail::block_forward(b, x).fuse.output(); }

// Per-block reconstruction loss: cosine + KL to the frozen class centroid
// on the block's fused output against its own input, averaged over rows.
struct Objective {
  double total = 0.0;
  std::vector<double> per_block;
};

inline Objective jecl_objective(const JeclModel& model, const std::vector<Matrix>& class_samples,
                                double kld_weight = 1.0) {
  require_shape(class_samples.size() == model.num_classes(), "jecl_objective: one sample matrix per class");
  Objective o;
  for (std::size_t j = 0; j < model.num_classes(); ++j) {
    const auto& b = model.blocks[j];
    if (class_samples[j].rows() == 0) {
      o.per_block.push_back(0.0);
      continue;
    }
    const double v = nn::loss_cosine_kld(block_output(b, class_samples[j]), class_samples[j], b.centroid, kld_weight,
                                         nn::ZeroNorm::orthogonal)
                         .value;
    o.per_block.push_back(v);
    o.total += v;
  }
  return o;
}

struct TrainConfig {
  std::size_t max_epochs = 500;
  std::size_t patience = 20;
  nn::AdamConfig adam{};
  double kld_weight = 1.0;
};

struct TrainResult {
  std::vector<double> train_loss;       // summed block losses, per epoch
  std::vector<double> validation_loss;  // empty without validation data
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
};

// Samples are grouped by class: class_samples[j] feeds block j. Each epoch
// visits the blocks in class order with one full-class step per block; the
// tied latent therefore takes one optimizer step per block per epoch and the
// block-private layers one step per epoch. With validation data the best
// epoch's weights are restored after `patience` epochs without improvement.
inline TrainResult train_jecl(JeclModel& model, const std::vector<Matrix>& class_samples, const TrainConfig& cfg,
                              const std::vector<Matrix>& validation = {}) {
  require_shape(class_samples.size() == model.num_classes(), "train_jecl: one sample matrix per class");
  for (std::size_t j = 0; j < class_samples.size(); ++j) {
    if (class_samples[j].rows() == 0) throw EmptyClassError("train_jecl: class " + std::to_string(j) + " has no samples");
    require_shape(static_cast<std::size_t>(class_samples[j].cols()) == model.input_dim, "train_jecl: sample dim mismatch");
  }
  const bool use_validation =
      validation.size() == model.num_classes() &&
      std::all_of(validation.begin(), validation.end(), [](const Matrix& m) { return m.rows() > 0; });

  for (std::size_t j = 0; j < model.num_classes(); ++j)
    if (model.blocks[j].centroid.size() == 0) model.blocks[j].centroid = class_samples[j].colwise().mean().transpose();

  std::vector<nn::ParameterSet> step_params;
  for (std::size_t j = 0; j < model.num_classes(); ++j) step_params.push_back(model.block_parameters(j));
  nn::ParameterSet snapshot_set = model.parameters();

  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  Vector best_params;
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (std::size_t j = 0; j < model.num_classes(); ++j) {
      EmotionBlock& b = model.blocks[j];
      step_params[j].zero_grad();
      const detail::BlockPass pass = detail::block_forward(b, class_samples[j]);
      const nn::LossReport loss = nn::loss_cosine_kld(pass.fuse.output(), class_samples[j], b.centroid, cfg.kld_weight,
                                                    nn::ZeroNorm::orthogonal);
      epoch_loss += loss.value;
      detail::block_backward(b, pass, loss.grad);
      nn::adam_step(step_params[j], cfg.adam);
    }
    result.train_loss.push_back(epoch_loss);
    result.epochs_run = epoch + 1;
    if (!std::isfinite(epoch_loss)) throw NumericalError("train_jecl: loss diverged");

    if (use_validation) {
      const double v = jecl_objective(model, validation, cfg.kld_weight).total;
      result.validation_loss.push_back(v);
      if (v < best) {
        best = v;
        best_params = snapshot_set.values();
        result.best_epoch = epoch + 1;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        break;
      }
    } else {
      result.best_epoch = epoch + 1;
    }
  }
  if (use_validation && best_params.size() > 0) snapshot_set.set_values(best_params);
  return result;
}

// Groups rows of x by integer class label 0..C-1.
inline std::vector<Matrix> group_by_class(const Matrix& x, const std::vector<int>& labels, std::size_t num_classes) {
  require_shape(static_cast<std::size_t>(x.rows()) == labels.size(), "group_by_class: label count mismatch");
  std::vector<std::vector<std::size_t>> idx(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < num_classes, "group_by_class: label out of range");
    idx[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::vector<Matrix> out;
  for (const auto& ix : idx) out.push_back(take_rows(x, ix));
  return out;
}

// One N-dim vector per block, ordered by class id.
struct JointEmbedding {
  std::vector<Vector> blocks;
};

// Every sample goes through every block; no label is consulted.
inline JointEmbedding embed(const JeclModel& model, const Vector& x) {
  require_shape(static_cast<std::size_t>(x.size()) == model.input_dim,
                "embed: input has dim " + std::to_string(x.size()) + ", expected " + std::to_string(model.input_dim));
  const Matrix row = x.transpose();
  JointEmbedding e;
  for (const auto& b : model.blocks) e.blocks.push_back(block_output(b, row).row(0).transpose());
  return e;
}

// Batch form: returns C matrices (samples x N), one per block.
inline std::vector<Matrix> embed_batch(const JeclModel& model, const Matrix& x) {
  require_shape(static_cast<std::size_t>(x.cols()) == model.input_dim, "embed_batch: input dim mismatch");
  std::vector<Matrix> out;
  for (const auto& b : model.blocks) out.push_back(block_output(b, x));
  return out;
}

inline nn::json to_json(const JeclModel& m) {
  nn::json blocks = nn::json::array();
  for (const auto& b : m.blocks) {
    // The tied latent is stored once at the top level.
    nn::json sim = nn::json::array({nn::layer_to_json(*b.sim.layer(0)), nn::layer_to_json(*b.sim.layer(2))});
    blocks.push_back({{"class_id", b.class_id},
                      {"ind", nn::net_to_json(b.ind)},
                      {"sim_outer", sim},
                      {"fuse", nn::net_to_json(b.fuse)},
                      {"centroid", nn::vector_to_json(b.centroid)}});
  }
  return nn::wrap_checkpoint("jecl", {{"input_dim", m.input_dim},
                                      {"width", m.width},
                                      {"setup", std::string(to_string(m.setup))},
                                      {"shared_latent", nn::layer_to_json(*m.shared_latent)},
                                      {"blocks", blocks}});
}

inline JeclModel jecl_from_json(const nn::json& j) {
  const auto& p = nn::unwrap_checkpoint(j, "jecl");
  JeclModel m;
  m.input_dim = p.at("input_dim").get<std::size_t>();
  m.width = p.at("width").get<std::size_t>();
  m.setup = parse_setup(p.at("setup").get<std::string>());
  m.shared_latent = std::make_shared<nn::DenseLayer>(nn::layer_from_json(p.at("shared_latent")));
  for (const auto& bj : p.at("blocks")) {
    EmotionBlock b;
    b.class_id = bj.at("class_id").get<int>();
    b.ind = nn::net_from_json(bj.at("ind"));
    const auto& sim = bj.at("sim_outer");
    b.sim = DenseNet({std::make_shared<nn::DenseLayer>(nn::layer_from_json(sim.at(0))), m.shared_latent,
                      std::make_shared<nn::DenseLayer>(nn::layer_from_json(sim.at(1)))});
    b.fuse = nn::net_from_json(bj.at("fuse"));
    b.centroid = nn::vector_from_json(bj.at("centroid"));
    m.blocks.push_back(std::move(b));
  }
  return m;
}

}  // namespace jmml::jecl
