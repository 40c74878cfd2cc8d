#pragma once

// Experiment configuration, read from and written to JSON. Every key is
// optional; missing keys take the defaults below. Unknown keys are errors so
// that typos do not silently fall back to defaults.
//
// {
//   "setups": ["baseline", "jec_ssl", "baseline_edcc", "jmml"],
//   "seed": 0,
//   "dimension": "valence",
//   "data": {
//     "source": "synthetic",              // or "csv"
//     "modality1": "eeg.csv",             // feature CSVs when source == "csv"
//     "modality2": "speech.csv",
//     "synthetic": {"n_per_class": 500, "latent_dim": 6, "dims": [64, 32],
//                   "noise": 0.5, "separation": 3.0, "gain": 1.5}
//   },
//   "split": {"train_frac": 0.8, "val_frac_of_train": 0.1},
//   "standardize": true,                   // z-score on training statistics
//   "jecl": {"setup": "setup3", "width_factor": 2.0, "max_epochs": 500,
//            "patience": 20, "learning_rate": 0.001, "kld_weight": 1.0},
//   "mbpls": {"lv_start": 40, "lv_stop": 120, "lv_step": 2, "folds": 5,
//             "tolerance": 1e-10, "max_iterations": 500},
//   "edcc": {"setup": "setup3", "width_factor": 2.0, "projection_dim": 20,
//            "epochs": 200, "patience": 20, "batch_size": 32,
//            "learning_rate": 0.001, "cca_weight": 1.0, "srec_weight": 1.0,
//            "xrec_weight": 1.0, "cca_reg": 1e-4, "pair_by_label": true},
//   "forest": {"n_estimators": [50, 100, 200], "max_depth": [4, 8, 16],
//              "folds": 5, "f1_average": "macro"}
// }
//
// "n_estimators" / "max_depth" also accept {"start", "stop", "step"} ranges,
// e.g. {"start": 1000, "stop": 5000, "step": 10} for the exhaustive grid.

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "jmml/edcc_cae.hpp"
#include "jmml/error.hpp"
#include "jmml/jecl.hpp"
#include "jmml/mbpls.hpp"
#include "jmml/metrics.hpp"
#include "jmml/nn/serialize.hpp"
#include "jmml/pipeline/labels.hpp"
#include "jmml/pipeline/split.hpp"
#include "jmml/pipeline/synth.hpp"

namespace jmml::pipeline {

enum class SetupKind { baseline, jec_ssl, baseline_edcc, jmml };

inline std::string_view to_string(SetupKind s) {
  switch (s) {
    case SetupKind::baseline: return "baseline";
    case SetupKind::jec_ssl: return "jec_ssl";
    case SetupKind::baseline_edcc: return "baseline_edcc";
    case SetupKind::jmml: return "jmml";
  }
  return "?";
}

inline SetupKind parse_setup_kind(std::string_view s) {
  if (s == "baseline") return SetupKind::baseline;
  if (s == "jec_ssl") return SetupKind::jec_ssl;
  if (s == "baseline_edcc") return SetupKind::baseline_edcc;
  if (s == "jmml") return SetupKind::jmml;
  throw InvalidArgument("unknown setup '" + std::string(s) + "'");
}

inline bool uses_jecssl(SetupKind s) { return s == SetupKind::jec_ssl || s == SetupKind::jmml; }
inline bool uses_edcc(SetupKind s) { return s == SetupKind::baseline_edcc || s == SetupKind::jmml; }

struct DataConfig {
  std::string source = "synthetic";
  std::string modality1_path;
  std::string modality2_path;
  SynthConfig synthetic{};
};

struct JeclConfig {
  jecl::Setup setup = jecl::Setup::setup3;
  double width_factor = 2.0;
  jecl::TrainConfig train{};
};

struct MbplsConfig {
  std::size_t lv_start = 40;
  std::size_t lv_stop = 120;
  std::size_t lv_step = 2;
  std::size_t folds = 5;
  mbpls::FitOptions fit{};

  std::vector<std::size_t> grid() const { return mbpls::lv_grid(lv_start, lv_stop, lv_step); }
};

struct EdccConfig {
  jecl::Setup setup = jecl::Setup::setup3;
  double width_factor = 2.0;
  std::size_t projection_dim = 20;
  edcc::TrainConfig train{};
  edcc::LossWeights weights{};
  double cca_reg = 1e-4;
  bool pair_by_label = true;
};

struct ForestConfig {
  std::vector<std::size_t> n_estimators{50, 100, 200};
  std::vector<std::size_t> max_depth{4, 8, 16};
  std::size_t folds = 5;
  metrics::F1Average f1_average = metrics::F1Average::macro;
};

struct ExperimentConfig {
  std::vector<SetupKind> setups{SetupKind::baseline, SetupKind::jec_ssl, SetupKind::baseline_edcc, SetupKind::jmml};
  std::uint64_t seed = 0;
  EmotionDimension dimension = EmotionDimension::valence;
  DataConfig data{};
  SplitSpec split{};
  bool standardize = true;
  JeclConfig jecl{};
  MbplsConfig mbpls{};
  EdccConfig edcc{};
  ForestConfig forest{};
};

namespace detail {

using nn::json;

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw FormatError("config: '" + where + "' must be an object");
  for (const auto& [k, v] : j.items())
    if (allowed.count(k) == 0) throw FormatError("config: unknown key '" + where + "." + k + "'");
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

inline std::vector<std::size_t> read_grid(const json& j, const char* key, std::vector<std::size_t> fallback) {
  if (!j.contains(key)) return fallback;
  const json& g = j.at(key);
  if (g.is_object()) {
    check_keys(g, {"start", "stop", "step"}, key);
    const auto start = g.at("start").get<std::size_t>();
    const auto stop = g.at("stop").get<std::size_t>();
    const auto step = g.value("step", std::size_t{1});
    if (step == 0 || stop < start) throw FormatError(std::string("config: bad range for '") + key + "'");
    std::vector<std::size_t> out;
    for (std::size_t v = start; v <= stop; v += step) out.push_back(v);
    return out;
  }
  std::vector<std::size_t> out;
  read(j, key, out);
  if (out.empty()) throw FormatError(std::string("config: '") + key + "' must not be empty");
  return out;
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nn::json& j) {
  using detail::read;
  detail::check_keys(j, {"setups", "seed", "dimension", "data", "split", "standardize", "jecl", "mbpls", "edcc", "forest"},
                     "config");
  ExperimentConfig c;
  if (j.contains("setups")) {
    c.setups.clear();
    for (const auto& s : j.at("setups")) c.setups.push_back(parse_setup_kind(s.get<std::string>()));
    if (c.setups.empty()) throw FormatError("config: 'setups' must not be empty");
  }
  read(j, "seed", c.seed);
  if (j.contains("dimension")) c.dimension = parse_dimension(j.at("dimension").get<std::string>());
  read(j, "standardize", c.standardize);

  if (j.contains("data")) {
    const auto& d = j.at("data");
    detail::check_keys(d, {"source", "modality1", "modality2", "synthetic"}, "data");
    read(d, "source", c.data.source);
    read(d, "modality1", c.data.modality1_path);
    read(d, "modality2", c.data.modality2_path);
    if (d.contains("synthetic")) {
      const auto& s = d.at("synthetic");
      detail::check_keys(s, {"n_per_class", "latent_dim", "dims", "noise", "separation", "gain"}, "data.synthetic");
      read(s, "n_per_class", c.data.synthetic.n_per_class);
      read(s, "latent_dim", c.data.synthetic.latent_dim);
      read(s, "dims", c.data.synthetic.dims);
      read(s, "noise", c.data.synthetic.noise);
      read(s, "separation", c.data.synthetic.separation);
      read(s, "gain", c.data.synthetic.gain);
    }
  }
  if (c.data.source != "synthetic" && c.data.source != "csv")
    throw FormatError("config: data.source must be 'synthetic' or 'csv'");
  if (c.data.source == "csv" && (c.data.modality1_path.empty() || c.data.modality2_path.empty()))
    throw FormatError("config: csv source needs data.modality1 and data.modality2");

  if (j.contains("split")) {
    const auto& s = j.at("split");
    detail::check_keys(s, {"train_frac", "val_frac_of_train"}, "split");
    read(s, "train_frac", c.split.train_frac);
    read(s, "val_frac_of_train", c.split.val_frac_of_train);
  }
  if (j.contains("jecl")) {
    const auto& s = j.at("jecl");
    detail::check_keys(s, {"setup", "width_factor", "max_epochs", "patience", "learning_rate", "kld_weight"}, "jecl");
    if (s.contains("setup")) c.jecl.setup = jecl::parse_setup(s.at("setup").get<std::string>());
    read(s, "width_factor", c.jecl.width_factor);
    read(s, "max_epochs", c.jecl.train.max_epochs);
    read(s, "patience", c.jecl.train.patience);
    read(s, "learning_rate", c.jecl.train.adam.learning_rate);
    read(s, "kld_weight", c.jecl.train.kld_weight);
  }
  if (j.contains("mbpls")) {
    const auto& s = j.at("mbpls");
    detail::check_keys(s, {"lv_start", "lv_stop", "lv_step", "folds", "tolerance", "max_iterations"}, "mbpls");
    read(s, "lv_start", c.mbpls.lv_start);
    read(s, "lv_stop", c.mbpls.lv_stop);
    read(s, "lv_step", c.mbpls.lv_step);
    read(s, "folds", c.mbpls.folds);
    read(s, "tolerance", c.mbpls.fit.tolerance);
    read(s, "max_iterations", c.mbpls.fit.max_iterations);
  }
  if (j.contains("edcc")) {
    const auto& s = j.at("edcc");
    detail::check_keys(s, {"setup", "width_factor", "projection_dim", "epochs", "patience", "batch_size", "learning_rate",
                           "cca_weight", "srec_weight", "xrec_weight", "cca_reg", "pair_by_label"},
                       "edcc");
    if (s.contains("setup")) c.edcc.setup = jecl::parse_setup(s.at("setup").get<std::string>());
    read(s, "width_factor", c.edcc.width_factor);
    read(s, "projection_dim", c.edcc.projection_dim);
    read(s, "epochs", c.edcc.train.epochs);
    read(s, "patience", c.edcc.train.patience);
    read(s, "batch_size", c.edcc.train.batch_size);
    read(s, "learning_rate", c.edcc.train.adam.learning_rate);
    read(s, "cca_weight", c.edcc.weights.cca);
    read(s, "srec_weight", c.edcc.weights.srec);
    read(s, "xrec_weight", c.edcc.weights.xrec);
    read(s, "cca_reg", c.edcc.cca_reg);
    read(s, "pair_by_label", c.edcc.pair_by_label);
  }
  if (j.contains("forest")) {
    const auto& s = j.at("forest");
    detail::check_keys(s, {"n_estimators", "max_depth", "folds", "f1_average"}, "forest");
    c.forest.n_estimators = detail::read_grid(s, "n_estimators", c.forest.n_estimators);
    c.forest.max_depth = detail::read_grid(s, "max_depth", c.forest.max_depth);
    read(s, "folds", c.forest.folds);
    if (s.contains("f1_average")) c.forest.f1_average = metrics::parse_f1_average(s.at("f1_average").get<std::string>());
  }
  return c;
}

inline nn::json to_json(const ExperimentConfig& c) {
  nn::json setups = nn::json::array();
  for (SetupKind s : c.setups) setups.push_back(std::string(to_string(s)));
  const auto& sy = c.data.synthetic;
  return {
      {"setups", setups},
      {"seed", c.seed},
      {"dimension", std::string(to_string(c.dimension))},
      {"data",
       {{"source", c.data.source},
        {"modality1", c.data.modality1_path},
        {"modality2", c.data.modality2_path},
        {"synthetic",
         {{"n_per_class", sy.n_per_class},
          {"latent_dim", sy.latent_dim},
          {"dims", sy.dims},
          {"noise", sy.noise},
          {"separation", sy.separation},
          {"gain", sy.gain}}}}},
      {"split", {{"train_frac", c.split.train_frac}, {"val_frac_of_train", c.split.val_frac_of_train}}},
      {"standardize", c.standardize},
      {"jecl",
       {{"setup", std::string(jecl::to_string(c.jecl.setup))},
        {"width_factor", c.jecl.width_factor},
        {"max_epochs", c.jecl.train.max_epochs},
        {"patience", c.jecl.train.patience},
        {"learning_rate", c.jecl.train.adam.learning_rate},
        {"kld_weight", c.jecl.train.kld_weight}}},
      {"mbpls",
       {{"lv_start", c.mbpls.lv_start},
        {"lv_stop", c.mbpls.lv_stop},
        {"lv_step", c.mbpls.lv_step},
        {"folds", c.mbpls.folds},
        {"tolerance", c.mbpls.fit.tolerance},
        {"max_iterations", c.mbpls.fit.max_iterations}}},
      {"edcc",
       {{"setup", std::string(jecl::to_string(c.edcc.setup))},
        {"width_factor", c.edcc.width_factor},
        {"projection_dim", c.edcc.projection_dim},
        {"epochs", c.edcc.train.epochs},
        {"patience", c.edcc.train.patience},
        {"batch_size", c.edcc.train.batch_size},
        {"learning_rate", c.edcc.train.adam.learning_rate},
        {"cca_weight", c.edcc.weights.cca},
        {"srec_weight", c.edcc.weights.srec},
        {"xrec_weight", c.edcc.weights.xrec},
        {"cca_reg", c.edcc.cca_reg},
        {"pair_by_label", c.edcc.pair_by_label}}},
      {"forest",
       {{"n_estimators", c.forest.n_estimators},
        {"max_depth", c.forest.max_depth},
        {"folds", c.forest.folds},
        {"f1_average", std::string(metrics::to_string(c.forest.f1_average))}}},
  };
}

inline ExperimentConfig load_config(const std::string& path) { return config_from_json(nn::read_json_file(path)); }

}  // namespace jmml::pipeline
