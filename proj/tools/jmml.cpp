// jmml command line: feature extraction, synthetic data, the individual
// learning stages, evaluation, and the full four-setup experiment.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "jmml/jmml.hpp"

using namespace jmml;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> label_strings(const pipeline::Dataset& ds) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ds.size(); ++i) out.push_back(pipeline::label_string({ds.dimensions[i], ds.labels[i]}));
  return out;
}

pipeline::Dataset load(const std::string& path, Modality m, const std::string& dimension) {
  pipeline::Dataset ds = pipeline::read_feature_csv(path, m);
  if (!dimension.empty()) ds = ds.select(pipeline::parse_dimension(dimension));
  return ds;
}

// --- extract ---------------------------------------------------------------

struct ExtractArgs {
  std::string trials, out, selection = "default";
  bool trim = false;
};

void cmd_extract(const ExtractArgs& a) {
  const auto sel = a.selection == "full" ? biomarkers::full_selection() : biomarkers::default_selection();
  const auto trials = pipeline::read_trials(a.trials);
  if (trials.empty()) throw FormatError("'" + a.trials + "' holds no trials");
  std::vector<std::string> ids, labels;
  Matrix features;
  for (std::size_t t = 0; t < trials.size(); ++t) {
    const biomarkers::EegTrial trial = a.trim ? biomarkers::trim_window(trials[t].trial, 3.0, 63.0) : trials[t].trial;
    const FeatureVector f = biomarkers::extract_trial(trial, sel);
    if (t == 0) features.resize(static_cast<Eigen::Index>(trials.size()), static_cast<Eigen::Index>(f.dim()));
    features.row(static_cast<Eigen::Index>(t)) = f.values.transpose();
    ids.push_back(trial.trial_id);
    labels.push_back(trials[t].label);
  }
  pipeline::write_feature_csv(a.out, ids, labels, features, "trial_id");
  std::cerr << trials.size() << " trials -> " << features.cols() << " features: " << a.out << '\n';
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  pipeline::SynthConfig cfg;
  std::string out_dir = ".", dimension = "valence";
};

void cmd_synth(SynthArgs a) {
  a.cfg.dimension = pipeline::parse_dimension(a.dimension);
  const auto r = pipeline::synth_bimodal(a.cfg);
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  pipeline::write_feature_csv((dir / "modality1.csv").string(), r.modality1);
  pipeline::write_feature_csv((dir / "modality2.csv").string(), r.modality2);
  nn::write_json_file((dir / "generator.json").string(), r.generator);
  std::cerr << "wrote " << r.modality1.size() << " paired samples to " << a.out_dir << '\n';
}

// --- train-jecl ------------------------------------------------------------

struct JeclArgs {
  std::string features, out, embed_prefix, setup = "setup3", dimension;
  double width = 2.0, lr = 1e-3, kld = 1.0;
  std::size_t epochs = 500;
  std::uint64_t seed = 0;
};

void cmd_train_jecl(const JeclArgs& a) {
  const auto ds = load(a.features, Modality::eeg, a.dimension);
  jecl::JeclModel m = jecl::build_jecl(ds.dim(), 2, jecl::parse_setup(a.setup), a.width, a.seed);
  jecl::TrainConfig tc;
  tc.max_epochs = a.epochs;
  tc.adam.learning_rate = a.lr;
  tc.kld_weight = a.kld;
  const auto r = jecl::train_jecl(m, jecl::group_by_class(ds.features, ds.class_indices(), 2), tc);
  nn::write_json_file(a.out, jecl::to_json(m));
  std::cerr << "epochs " << r.epochs_run << ", final loss " << r.train_loss.back() << '\n';
  if (!a.embed_prefix.empty()) {
    const auto blocks = jecl::embed_batch(m, ds.features);
    for (std::size_t j = 0; j < blocks.size(); ++j)
      pipeline::write_feature_csv(a.embed_prefix + "_block" + std::to_string(j) + ".csv", ds.ids, label_strings(ds),
                                  blocks[j]);
  }
}

// --- fit-mbpls -------------------------------------------------------------

struct MbplsArgs {
  std::vector<std::string> blocks;
  std::string target, out, predict_out;
  std::size_t lv_start = 40, lv_stop = 120, lv_step = 2, folds = 5, k = 0;
  std::uint64_t seed = 0;
};

void cmd_fit_mbpls(const MbplsArgs& a) {
  const auto target = pipeline::read_feature_csv(a.target, Modality::eeg);
  std::vector<Matrix> blocks;
  for (const auto& b : a.blocks) {
    const auto ds = pipeline::read_feature_csv(b, Modality::eeg);
    if (ds.ids != target.ids) throw FormatError("'" + b + "': sample ids differ from the target file");
    blocks.push_back(ds.features);
  }
  std::size_t k = a.k;
  if (k == 0) {
    const auto t = mbpls::tune_lv(blocks, target.features, mbpls::lv_grid(a.lv_start, a.lv_stop, a.lv_step), a.folds, a.seed);
    k = t.best_k;
    std::cerr << "chosen K = " << k << '\n';
  }
  const auto m = mbpls::fit(blocks, target.features, k);
  for (const auto& w : m.warnings) std::cerr << "warning: " << w << '\n';
  nn::write_json_file(a.out, mbpls::to_json(m));
  if (!a.predict_out.empty())
    pipeline::write_feature_csv(a.predict_out, target.ids, label_strings(target), mbpls::predict(m, blocks));
}

// --- train-jmml ------------------------------------------------------------

struct EdccArgs {
  std::string modality1, modality2, out, features_prefix, setup = "setup3", dimension;
  double width = 2.0, lr = 1e-3;
  std::size_t projection = 20, epochs = 200, batch = 32;
  bool by_index = false;
  std::uint64_t seed = 0;
};

void cmd_train_jmml(const EdccArgs& a) {
  const std::array<pipeline::Dataset, 2> ds{load(a.modality1, Modality::eeg, a.dimension),
                                            load(a.modality2, Modality::speech, a.dimension)};
  edcc::EdccCaeModel m = edcc::build_edcc({ds[0].dim(), ds[1].dim()}, a.width, a.projection, jecl::parse_setup(a.setup), a.seed);
  std::array<Matrix, 2> scaled;
  for (std::size_t k = 0; k < 2; ++k) {
    m.modality[k].scaler = edcc::MinMaxScaler::fit(ds[k].features);
    scaled[k] = m.modality[k].scaler.transform(ds[k].features);
  }
  edcc::TrainConfig tc;
  tc.epochs = a.epochs;
  tc.batch_size = a.batch;
  tc.adam.learning_rate = a.lr;
  tc.seed = a.seed;
  std::optional<edcc::PairingLabels> labels;
  if (!a.by_index) labels = edcc::PairingLabels{ds[0].class_indices(), ds[1].class_indices()};
  const auto r = edcc::train_edcc(m, scaled[0], scaled[1], tc, labels);
  nn::write_json_file(a.out, edcc::to_json(m));
  std::cerr << "epochs " << r.epochs_run << ", final loss " << r.trace.back().total << ", mean correlation "
            << r.trace.back().mean_correlation << '\n';
  if (!a.features_prefix.empty())
    for (std::size_t k = 0; k < 2; ++k)
      pipeline::write_feature_csv(a.features_prefix + "_modality" + std::to_string(k + 1) + ".csv", ds[k].ids,
                                  label_strings(ds[k]), edcc::classifier_features(m, k, ds[k].features));
}

// --- evaluate --------------------------------------------------------------

struct EvalArgs {
  std::string train, test, dimension, f1 = "macro", model_out;
  std::vector<std::size_t> estimators{50, 100, 200}, depths{4, 8, 16};
  std::size_t folds = 5;
  std::uint64_t seed = 0;
};

void cmd_evaluate(const EvalArgs& a) {
  const auto tr = load(a.train, Modality::eeg, a.dimension);
  const auto te = load(a.test, Modality::eeg, a.dimension);
  const auto avg = metrics::parse_f1_average(a.f1);
  const auto g = metrics::grid_search(tr.features, tr.labels, a.estimators, a.depths, a.folds, a.seed, avg);
  const auto rf = forest::fit_rf(tr.features, tr.labels, {g.n_estimators, g.max_depth, a.seed});
  if (!a.model_out.empty()) nn::write_json_file(a.model_out, forest::to_json(rf));
  nn::json out = metrics::to_json(metrics::evaluate(te.labels, forest::predict(rf, te.features), avg));
  out["n_estimators"] = g.n_estimators;
  out["max_depth"] = g.max_depth;
  out["cv_f1"] = g.cv_f1;
  std::cout << out.dump(1) << '\n';
}

// --- run -------------------------------------------------------------------

struct RunArgs {
  std::string config, json_out;
  std::optional<std::uint64_t> seed;
};

void cmd_run(const RunArgs& a) {
  pipeline::ExperimentConfig cfg = a.config.empty() ? pipeline::ExperimentConfig{} : pipeline::load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  const auto rows = pipeline::run_experiment(cfg);
  std::cout << pipeline::render_table(rows, cfg.dimension);
  if (!a.json_out.empty()) nn::write_json_file(a.json_out, pipeline::to_json(rows));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint multi-modal emotion learning: EEG biomarkers, JEC-SSL, E-DCC-CAE"};
  app.require_subcommand(1);

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "EEG trials (binary or CSV) -> feature CSV");
  extract->add_option("trials", ex.trials, "trial file")->required()->check(CLI::ExistingFile);
  extract->add_option("-o,--out", ex.out, "feature CSV")->required();
  extract->add_option("--selection", ex.selection, "default (13 per channel) or full")->check(CLI::IsMember({"default", "full"}));
  extract->add_flag("--trim", ex.trim, "keep only [3 s, 63 s) of each trial");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "write a synthetic shared-latent bimodal dataset");
  synth->add_option("-o,--out-dir", sy.out_dir);
  synth->add_option("-n,--n-per-class", sy.cfg.n_per_class);
  synth->add_option("--latent-dim", sy.cfg.latent_dim);
  synth->add_option("--dim1", sy.cfg.dims[0]);
  synth->add_option("--dim2", sy.cfg.dims[1]);
  synth->add_option("--noise", sy.cfg.noise);
  synth->add_option("--separation", sy.cfg.separation);
  synth->add_option("--gain", sy.cfg.gain);
  synth->add_option("--dimension", sy.dimension)->check(CLI::IsMember({"valence", "arousal"}));
  synth->add_option("--seed", sy.cfg.seed);

  JeclArgs jc;
  auto* tj = app.add_subcommand("train-jecl", "train the per-class JECL blocks on one modality");
  tj->add_option("features", jc.features, "feature CSV")->required()->check(CLI::ExistingFile);
  tj->add_option("-o,--out", jc.out, "checkpoint JSON")->required();
  tj->add_option("--embed-prefix", jc.embed_prefix, "also write <prefix>_block{0,1}.csv");
  tj->add_option("--setup", jc.setup)->check(CLI::IsMember({"setup1", "setup2", "setup3"}));
  tj->add_option("--width", jc.width);
  tj->add_option("--epochs", jc.epochs);
  tj->add_option("--lr", jc.lr);
  tj->add_option("--kld-weight", jc.kld);
  tj->add_option("--dimension", jc.dimension, "keep only valence or arousal rows");
  tj->add_option("--seed", jc.seed);

  MbplsArgs mb;
  auto* fm = app.add_subcommand("fit-mbpls", "fit MBPLS from block CSVs to a target CSV");
  fm->add_option("--block", mb.blocks, "block CSV (repeat per block)")->required();
  fm->add_option("--target", mb.target, "target CSV")->required()->check(CLI::ExistingFile);
  fm->add_option("-o,--out", mb.out, "checkpoint JSON")->required();
  fm->add_option("--predict-out", mb.predict_out, "write the fitted target as CSV");
  fm->add_option("-k,--components", mb.k, "fixed K; 0 tunes by cross-validation");
  fm->add_option("--lv-start", mb.lv_start);
  fm->add_option("--lv-stop", mb.lv_stop);
  fm->add_option("--lv-step", mb.lv_step);
  fm->add_option("--folds", mb.folds);
  fm->add_option("--seed", mb.seed);

  EdccArgs ed;
  auto* tm = app.add_subcommand("train-jmml", "train E-DCC-CAE on two modality CSVs (raw or JEC-SSL outputs)");
  tm->add_option("modality1", ed.modality1)->required()->check(CLI::ExistingFile);
  tm->add_option("modality2", ed.modality2)->required()->check(CLI::ExistingFile);
  tm->add_option("-o,--out", ed.out, "checkpoint JSON")->required();
  tm->add_option("--features-prefix", ed.features_prefix, "also write <prefix>_modality{1,2}.csv of [x, s_rec]");
  tm->add_option("--setup", ed.setup)->check(CLI::IsMember({"setup1", "setup2", "setup3"}));
  tm->add_option("--width", ed.width);
  tm->add_option("--projection-dim", ed.projection);
  tm->add_option("--epochs", ed.epochs);
  tm->add_option("--batch", ed.batch);
  tm->add_option("--lr", ed.lr);
  tm->add_flag("--pair-by-index", ed.by_index, "pair row i with row i instead of by label");
  tm->add_option("--dimension", ed.dimension, "keep only valence or arousal rows");
  tm->add_option("--seed", ed.seed);

  EvalArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "grid-searched random forest, EvalReport as JSON");
  evaluate->add_option("train", ev.train)->required()->check(CLI::ExistingFile);
  evaluate->add_option("test", ev.test)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--n-estimators", ev.estimators);
  evaluate->add_option("--max-depth", ev.depths);
  evaluate->add_option("--folds", ev.folds);
  evaluate->add_option("--f1", ev.f1)->check(CLI::IsMember({"macro", "weighted", "positive"}));
  evaluate->add_option("--model-out", ev.model_out);
  evaluate->add_option("--dimension", ev.dimension, "keep only valence or arousal rows");
  evaluate->add_option("--seed", ev.seed);

  RunArgs ru;
  auto* run = app.add_subcommand("run", "full experiment: four setups x two modalities");
  run->add_option("-c,--config", ru.config, "experiment JSON")->check(CLI::ExistingFile);
  run->add_option("--json", ru.json_out, "write report rows as JSON");
  run->add_option("--seed", ru.seed, "override the config seed");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*extract) cmd_extract(ex);
    else if (*synth) cmd_synth(sy);
    else if (*tj) cmd_train_jecl(jc);
    else if (*fm) cmd_fit_mbpls(mb);
    else if (*tm) cmd_train_jmml(ed);
    else if (*evaluate) cmd_evaluate(ev);
    else if (*run) cmd_run(ru);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
