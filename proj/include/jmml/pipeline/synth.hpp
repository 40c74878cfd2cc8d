#pragma once

// Desk-scale bimodal surrogate: a class-conditioned latent z is observed by
// two modalities through fixed random nonlinear maps plus Gaussian noise.
//
//   z   = y * (separation / 2) * e + N(0, I_latent)         y in {-1, +1}
//   x_m = tanh(A_m z + c_m) + noise * N(0, I_dm)
//
// e is a random unit direction, A_m has N(0, gain^2 / latent_dim) entries
// and c_m ~ U(-0.5, 0.5). Sample i of both modalities shares z_i and label.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>

#include "jmml/error.hpp"
#include "jmml/nn/serialize.hpp"
#include "jmml/pipeline/dataset.hpp"
#include "jmml/types.hpp"

namespace jmml::pipeline {

struct SynthConfig {
  std::size_t n_per_class = 500;
  std::size_t latent_dim = 6;
  std::array<std::size_t, 2> dims{64, 32};
  double noise = 0.5;
  double separation = 3.0;
  double gain = 1.5;
  EmotionDimension dimension = EmotionDimension::valence;
  std::uint64_t seed = 0;
};

struct SynthResult {
  Dataset modality1;  // EEG analog
  Dataset modality2;  // speech analog
  Matrix latent;      // n x latent_dim
  nn::json generator; // parameters needed to reproduce the maps
};

inline SynthResult synth_bimodal(const SynthConfig& cfg) {
  require(cfg.n_per_class >= 1, "synth_bimodal: n_per_class must be >= 1");
  require(cfg.latent_dim >= 1, "synth_bimodal: latent_dim must be >= 1");
  require(cfg.dims[0] >= cfg.latent_dim && cfg.dims[1] >= cfg.latent_dim, "synth_bimodal: dims must be >= latent_dim");
  require(cfg.noise >= 0.0, "synth_bimodal: noise must be >= 0");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);
  const auto l = static_cast<Eigen::Index>(cfg.latent_dim);

  Vector direction(l);
  for (Eigen::Index i = 0; i < l; ++i) direction[i] = normal(rng);
  direction.normalize();
  std::array<Matrix, 2> maps;
  std::array<Vector, 2> offsets;
  for (std::size_t m = 0; m < 2; ++m) {
    const auto d = static_cast<Eigen::Index>(cfg.dims[m]);
    maps[m].resize(d, l);
    for (Eigen::Index i = 0; i < maps[m].size(); ++i)
      maps[m].data()[i] = normal(rng) * cfg.gain / std::sqrt(static_cast<double>(cfg.latent_dim));
    offsets[m].resize(d);
    for (Eigen::Index i = 0; i < d; ++i) offsets[m][i] = uniform(rng);
  }

  const auto n = static_cast<Eigen::Index>(2 * cfg.n_per_class);
  SynthResult out;
  out.latent.resize(n, l);
  std::vector<Polarity> labels;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Polarity p = i % 2 == 0 ? Polarity::positive : Polarity::negative;
    labels.push_back(p);
    const double sign = p == Polarity::positive ? 1.0 : -1.0;
    for (Eigen::Index k = 0; k < l; ++k) out.latent(i, k) = sign * 0.5 * cfg.separation * direction[k] + normal(rng);
  }

  std::array<Dataset*, 2> sets{&out.modality1, &out.modality2};
  for (std::size_t m = 0; m < 2; ++m) {
    Dataset& ds = *sets[m];
    ds.modality = m == 0 ? Modality::eeg : Modality::speech;
    ds.source = Source::synthetic;
    Matrix clean = (out.latent * maps[m].transpose()).rowwise() + offsets[m].transpose();
    ds.features = clean.array().tanh();
    for (Eigen::Index i = 0; i < ds.features.size(); ++i) ds.features.data()[i] += cfg.noise * normal(rng);
    ds.labels = labels;
    ds.dimensions.assign(labels.size(), cfg.dimension);
    for (Eigen::Index i = 0; i < n; ++i) ds.ids.push_back("m" + std::to_string(m + 1) + "_" + std::to_string(i));
  }

  out.generator = {{"n_per_class", cfg.n_per_class},
                   {"latent_dim", cfg.latent_dim},
                   {"dims", cfg.dims},
                   {"noise", cfg.noise},
                   {"separation", cfg.separation},
                   {"gain", cfg.gain},
                   {"seed", cfg.seed},
                   {"direction", nn::vector_to_json(direction)},
                   {"maps", {nn::matrix_to_json(maps[0]), nn::matrix_to_json(maps[1])}},
                   {"offsets", {nn::vector_to_json(offsets[0]), nn::vector_to_json(offsets[1])}}};
  return out;
}

}  // namespace jmml::pipeline
