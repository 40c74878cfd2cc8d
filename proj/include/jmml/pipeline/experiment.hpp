#pragma once

// Four-setup experiment runner.
//
//   baseline       X_m                 -> RF
//   jec_ssl        JECL + MBPLS -> X'_m -> RF
//   baseline_edcc  [X_m, s_rec(X_m)]   -> RF
//   jmml           [X'_m, s_rec(X'_m)] -> RF
//
// Data handling per modality: stratified split (same split seed for both
// modalities), z-scoring on training statistics, minority class
// oversampling of the training part, then modality 2's training part is
// resampled to modality 1's class counts. JECL and MBPLS are fitted on the
// unique training rows; E-DCC-CAE and the forest use the balanced training
// set. Validation rows drive early stopping only.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "jmml/edcc_cae.hpp"
#include "jmml/error.hpp"
#include "jmml/forest.hpp"
#include "jmml/jecl.hpp"
#include "jmml/mbpls.hpp"
#include "jmml/metrics.hpp"
#include "jmml/pipeline/config.hpp"
#include "jmml/pipeline/dataset.hpp"
#include "jmml/pipeline/io.hpp"
#include "jmml/pipeline/split.hpp"
#include "jmml/pipeline/synth.hpp"
#include "jmml/types.hpp"

namespace jmml::pipeline {

struct ReportRow {
  SetupKind setup = SetupKind::baseline;
  Modality modality = Modality::eeg;
  std::string input;  // e.g. "[X'_2, X̄'^2_2]"
  std::size_t input_dim = 0;
  double accuracy = 0.0;
  double f1 = 0.0;
  std::size_t n_estimators = 0;
  std::size_t max_depth = 0;
  double cv_f1 = 0.0;
  std::size_t latent_variables = 0;  // MBPLS K, 0 when unused
  EmotionDimension dimension = EmotionDimension::valence;
  std::uint64_t seed = 0;
};

inline std::string input_descriptor(SetupKind s, std::size_t m) {
  const std::string i = std::to_string(m + 1);
  switch (s) {
    case SetupKind::baseline: return "X_" + i;
    case SetupKind::jec_ssl: return "X'_" + i;
    case SetupKind::baseline_edcc: return "[X_" + i + ", X̄^" + i + "_" + i + "]";
    case SetupKind::jmml: return "[X'_" + i + ", X̄'^" + i + "_" + i + "]";
  }
  return "?";
}

// Per-feature z-score; constant features get unit scale.
struct Standardizer {
  RowVector mean;
  RowVector scale;

  static Standardizer fit(const Matrix& x) {
    Standardizer s;
    s.mean = x.colwise().mean();
    const Matrix c = x.rowwise() - s.mean;
    s.scale = (c.colwise().squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, x.rows() - 1))).cwiseSqrt();
    for (Eigen::Index k = 0; k < s.scale.size(); ++k)
      if (!(s.scale[k] > 0.0)) s.scale[k] = 1.0;
    return s;
  }

  Matrix transform(const Matrix& x) const {
    return (x.rowwise() - mean).array().rowwise() / scale.array();
  }
};

struct PreparedModality {
  Dataset fit;    // unique training rows
  Dataset train;  // fit rows after oversampling and size matching
  Dataset val;
  Dataset test;
};

struct PreparedData {
  std::array<PreparedModality, 2> modality;
  bool leakage_free = true;
};

namespace stage_seed {
inline constexpr std::uint64_t split = 1, mco = 2, match = 3, jecl = 4, mbpls = 5, edcc = 6, edcc_val = 7, grid = 8,
                               forest = 9;
}

template <class F>
auto run_stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

inline PreparedData prepare(const std::array<Dataset, 2>& raw, const ExperimentConfig& cfg) {
  PreparedData out;
  SplitSpec spec = cfg.split;
  spec.seed = derive_seed(cfg.seed, stage_seed::split);
  for (std::size_t m = 0; m < 2; ++m) {
    const Dataset ds = raw[m].select(cfg.dimension);
    ds.validate();
    const SplitIndices s = stratified_split(ds.labels, spec);
    PreparedModality& p = out.modality[m];
    p.fit = ds.subset(s.train);
    p.val = ds.subset(s.val);
    p.test = ds.subset(s.test);
    if (cfg.standardize) {
      const Standardizer z = Standardizer::fit(p.fit.features);
      for (Dataset* d : {&p.fit, &p.val, &p.test}) d->features = z.transform(d->features);
    }
    p.train = p.fit.subset(mco_oversample(p.fit.labels, derive_seed(cfg.seed, stage_seed::mco + 16 * m)));
  }
  // Size matching: modality 2 resampled per class up to modality 1's counts.
  const auto target = class_counts(out.modality[0].train.labels);
  auto& m2 = out.modality[1];
  m2.train = m2.train.subset(match_class_counts(m2.train.labels, target, derive_seed(cfg.seed, stage_seed::match)));

  for (const auto& p : out.modality)
    out.leakage_free = out.leakage_free && no_leakage(p.test.ids, {p.fit.ids, p.train.ids, p.val.ids});
  if (!out.leakage_free) throw InvalidArgument("prepare: test identifiers found in training data");
  return out;
}

// Representation of one modality at each data part.
struct Representation {
  Matrix fit, train, val, test;
};

inline Representation raw_representation(const PreparedModality& p) {
  return {p.fit.features, p.train.features, p.val.features, p.test.features};
}

struct JecSslResult {
  Representation rep;
  std::size_t latent_variables = 0;
};

inline JecSslResult jec_ssl(const PreparedModality& p, const ExperimentConfig& cfg, std::size_t m) {
  const std::uint64_t salt = 16 * m;
  jecl::JeclModel model = run_stage("jecl", [&] {
    auto mdl = jecl::build_jecl(p.fit.dim(), 2, cfg.jecl.setup, cfg.jecl.width_factor,
                                derive_seed(cfg.seed, stage_seed::jecl + salt));
    const auto groups = jecl::group_by_class(p.fit.features, p.fit.class_indices(), 2);
    std::vector<Matrix> val_groups;
    if (p.val.size() > 0) val_groups = jecl::group_by_class(p.val.features, p.val.class_indices(), 2);
    jecl::train_jecl(mdl, groups, cfg.jecl.train, val_groups);
    return mdl;
  });
  return run_stage("mbpls", [&] {
    const auto blocks = jecl::embed_batch(model, p.fit.features);
    const auto tuned = mbpls::tune_lv(blocks, p.fit.features, cfg.mbpls.grid(), cfg.mbpls.folds,
                                      derive_seed(cfg.seed, stage_seed::mbpls + salt), cfg.mbpls.fit);
    const auto pls = mbpls::fit(blocks, p.fit.features, tuned.best_k, cfg.mbpls.fit);
    const auto project = [&](const Matrix& x) { return mbpls::predict(pls, jecl::embed_batch(model, x)); };
    JecSslResult r;
    r.rep = {project(p.fit.features), project(p.train.features), project(p.val.features), project(p.test.features)};
    r.latent_variables = pls.components;
    return r;
  });
}

// Trains E-DCC-CAE on both modalities' representations and returns the
// classifier inputs [x, s_rec(x)] for the train and test parts.
struct EdccFeatures {
  std::array<Matrix, 2> train, test;
};

inline EdccFeatures edcc_features(const PreparedData& data, const std::array<Representation, 2>& rep,
                                  const ExperimentConfig& cfg) {
  return run_stage("edcc", [&] {
    const auto& ec = cfg.edcc;
    edcc::EdccCaeModel model =
        edcc::build_edcc({static_cast<std::size_t>(rep[0].train.cols()), static_cast<std::size_t>(rep[1].train.cols())},
                         ec.width_factor, ec.projection_dim, ec.setup, derive_seed(cfg.seed, stage_seed::edcc));
    model.weights = ec.weights;
    model.cca_reg = ec.cca_reg;
    std::array<Matrix, 2> tr, va;
    for (std::size_t m = 0; m < 2; ++m) {
      model.modality[m].scaler = edcc::MinMaxScaler::fit(rep[m].fit);
      tr[m] = model.modality[m].scaler.transform(rep[m].train);
      va[m] = model.modality[m].scaler.transform(rep[m].val);
    }
    const auto& d1 = data.modality[0];
    const auto& d2 = data.modality[1];
    std::optional<edcc::PairingLabels> pairing;
    if (ec.pair_by_label) pairing = edcc::PairingLabels{d1.train.class_indices(), d2.train.class_indices()};

    // Validation pairs are drawn once with a fixed generator.
    Matrix v1, v2;
    if (d1.val.size() > 0 && d2.val.size() > 0) {
      std::mt19937_64 rng(derive_seed(cfg.seed, stage_seed::edcc_val));
      std::optional<edcc::PairingLabels> vl;
      if (ec.pair_by_label || d1.val.size() != d2.val.size())
        vl = edcc::PairingLabels{d1.val.class_indices(), d2.val.class_indices()};
      std::vector<std::size_t> i1, i2;
      for (const auto& [a, b] : edcc::detail::make_pairs(d1.val.size(), d2.val.size(), vl, rng)) {
        i1.push_back(a);
        i2.push_back(b);
      }
      v1 = take_rows(va[0], i1);
      v2 = take_rows(va[1], i2);
    }
    edcc::TrainConfig tc = ec.train;
    tc.seed = derive_seed(cfg.seed, stage_seed::edcc + 1);
    const bool has_val = v1.rows() > 0;
    edcc::train_edcc(model, tr[0], tr[1], tc, pairing, has_val ? &v1 : nullptr, has_val ? &v2 : nullptr);
    EdccFeatures f;
    for (std::size_t m = 0; m < 2; ++m) {
      f.train[m] = edcc::classifier_features(model, m, rep[m].train);
      f.test[m] = edcc::classifier_features(model, m, rep[m].test);
    }
    return f;
  });
}

inline ReportRow classify(SetupKind setup, std::size_t m, const Matrix& train, const std::vector<Polarity>& y_train,
                          const Matrix& test, const std::vector<Polarity>& y_test, const ExperimentConfig& cfg) {
  return run_stage("forest", [&] {
    const auto& fc = cfg.forest;
    const std::uint64_t salt = 16 * m + 256 * static_cast<std::uint64_t>(setup);
    const auto best = metrics::grid_search(train, y_train, fc.n_estimators, fc.max_depth, fc.folds,
                                           derive_seed(cfg.seed, stage_seed::grid + salt), fc.f1_average);
    const auto rf = forest::fit_rf(train, y_train,
                                   {best.n_estimators, best.max_depth, derive_seed(cfg.seed, stage_seed::forest + salt)});
    const auto report = metrics::evaluate(y_test, forest::predict(rf, test), fc.f1_average);
    ReportRow row;
    row.setup = setup;
    row.modality = m == 0 ? Modality::eeg : Modality::speech;
    row.input = input_descriptor(setup, m);
    row.input_dim = static_cast<std::size_t>(train.cols());
    row.accuracy = report.accuracy;
    row.f1 = report.f1;
    row.n_estimators = best.n_estimators;
    row.max_depth = best.max_depth;
    row.cv_f1 = best.cv_f1;
    row.dimension = cfg.dimension;
    row.seed = cfg.seed;
    return row;
  });
}

// Rows are ordered by setup (config order), then modality.
inline std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg, const std::array<Dataset, 2>& raw) {
  const PreparedData data = run_stage("prepare", [&] { return prepare(raw, cfg); });
  std::array<Representation, 2> raw_rep{raw_representation(data.modality[0]), raw_representation(data.modality[1])};

  std::array<std::optional<JecSslResult>, 2> ssl;
  const bool need_ssl = std::any_of(cfg.setups.begin(), cfg.setups.end(), uses_jecssl);
  if (need_ssl)
    for (std::size_t m = 0; m < 2; ++m) ssl[m] = jec_ssl(data.modality[m], cfg, m);

  std::vector<ReportRow> rows;
  for (SetupKind setup : cfg.setups) {
    std::array<Representation, 2> rep = raw_rep;
    if (uses_jecssl(setup))
      for (std::size_t m = 0; m < 2; ++m) rep[m] = ssl[m]->rep;
    std::array<Matrix, 2> train{rep[0].train, rep[1].train}, test{rep[0].test, rep[1].test};
    if (uses_edcc(setup)) {
      EdccFeatures f = edcc_features(data, rep, cfg);
      train = f.train;
      test = f.test;
    }
    for (std::size_t m = 0; m < 2; ++m) {
      const auto& d = data.modality[m];
      ReportRow row = classify(setup, m, train[m], d.train.labels, test[m], d.test.labels, cfg);
      if (uses_jecssl(setup)) row.latent_variables = ssl[m]->latent_variables;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline std::array<Dataset, 2> load_data(const ExperimentConfig& cfg) {
  return run_stage("data", [&] {
    if (cfg.data.source == "synthetic") {
      SynthConfig sc = cfg.data.synthetic;
      sc.seed = cfg.seed;
      sc.dimension = cfg.dimension;
      SynthResult s = synth_bimodal(sc);
      return std::array<Dataset, 2>{std::move(s.modality1), std::move(s.modality2)};
    }
    return std::array<Dataset, 2>{read_feature_csv(cfg.data.modality1_path, Modality::eeg),
                                  read_feature_csv(cfg.data.modality2_path, Modality::speech)};
  });
}

inline std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg) { return run_experiment(cfg, load_data(cfg)); }

}  // namespace jmml::pipeline
