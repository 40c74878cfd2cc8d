// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fail.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "jmml/jmml.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace jmml;
using oracle::randn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Vector flat(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }
Matrix unflat(const Vector& v, Eigen::Index r, Eigen::Index c) { return Eigen::Map<const Matrix>(v.data(), r, c); }

template <class Loss>
double check_matrix_loss(const Matrix& at, const Matrix& grad, Loss&& loss) {
  const auto f = [&](const Vector& v) { return loss(unflat(v, at.rows(), at.cols())); };
  return nn::grad_check(f, flat(at), flat(grad)).max_relative_error;
}

// Model-level check. Coordinates whose probe flips a ReLU are skipped (their
// central difference straddles a kink); the count is reported.
double check_params(nn::ParameterSet& p, const std::function<void()>& accumulate, const std::function<double()>& value,
                    const std::function<std::vector<bool>()>& relu_state, std::size_t& skipped) {
  p.zero_grad();
  accumulate();
  const Vector analytic = p.gradients();
  const Vector saved = p.values();
  const auto at = [&](const Vector& v, const auto& g) {
    p.set_values(v);
    const auto out = g();
    p.set_values(saved);
    return out;
  };
  const auto f = [&](const Vector& v) { return at(v, value); };
  const auto pattern = [&](const Vector& v) { return at(v, relu_state); };
  const auto r = nn::grad_check_piecewise(f, pattern, saved, analytic);
  skipped += r.skipped;
  return r.max_relative_error;
}

// 1. Central finite differences on every loss and both models, 20 fixtures each.
Outcome gradients() {
  const auto t0 = Clock::now();
  std::map<std::string, double> worst;
  std::size_t skipped = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    {
      const Matrix pred = randn(5, 6, rng), target = randn(5, 6, rng);
      const Vector c = randn(6, 1, rng);
      const auto r = nn::loss_cosine_kld(pred, target, c);
      worst["cosine_kld"] = std::max(worst["cosine_kld"], check_matrix_loss(pred, r.grad, [&](const Matrix& p) {
                                       return nn::loss_cosine_kld(p, target, c).value;
                                     }));
    }
    {
      std::uniform_real_distribution<double> u(0.05, 0.95);
      Matrix pred(4, 5), target(4, 5);
      for (Eigen::Index i = 0; i < pred.size(); ++i) {
        pred.data()[i] = u(rng);
        target.data()[i] = u(rng);
      }
      const auto r = nn::loss_bce(pred, target);
      worst["bce"] = std::max(worst["bce"], check_matrix_loss(pred, r.grad, [&](const Matrix& p) {
                                return nn::loss_bce(p, target).value;
                              }));
      const Matrix logits = randn(4, 5, rng, 2.0);
      const auto rl = nn::loss_bce_logits(logits, target);
      worst["bce_logits"] = std::max(worst["bce_logits"], check_matrix_loss(logits, rl.grad, [&](const Matrix& z) {
                                       return nn::loss_bce_logits(z, target).value;
                                     }));
    }
    {
      const Matrix a = randn(30, 4, rng), b = randn(30, 4, rng) + 0.7 * a;
      const auto r = nn::loss_cca(a, b);
      worst["cca"] = std::max(worst["cca"], check_matrix_loss(a, r.grad_a, [&](const Matrix& x) {
                                return nn::loss_cca(x, b).value;
                              }));
      worst["cca"] = std::max(worst["cca"], check_matrix_loss(b, r.grad_b, [&](const Matrix& y) {
                                return nn::loss_cca(a, y).value;
                              }));
    }
    {
      jecl::JeclModel m = jecl::build_jecl(4, 2, jecl::Setup::setup3, 1.0, seed);
      fixture::jitter_biases(m.parameters(), seed);
      const Matrix x = randn(6, 4, rng) + Matrix::Constant(6, 4, 0.5);
      auto& block = m.blocks[0];
      block.centroid = randn(4, 1, rng);
      nn::ParameterSet p = m.block_parameters(0);
      worst["jecl_block"] = std::max(
          worst["jecl_block"],
          check_params(
              p,
              [&] {
                const auto pass = jecl::detail::block_forward(block, x);
                jecl::detail::block_backward(block, pass, nn::loss_cosine_kld(pass.fuse.output(), x, block.centroid).grad);
              },
              [&] { return nn::loss_cosine_kld(jecl::block_output(block, x), x, block.centroid).value; },
              [&] {
                std::vector<bool> on;
                const auto pass = jecl::detail::block_forward(block, x);
                nn::append_relu_pattern(block.ind, pass.ind, on);
                nn::append_relu_pattern(block.sim, pass.sim, on);
                return on;
              },
              skipped));
    }
    {
      edcc::EdccCaeModel m = edcc::build_edcc({4, 3}, 1.0, 2, jecl::Setup::setup3, seed);
      fixture::jitter_biases(m.parameters(), seed);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      Matrix x1(30, 4), x2(30, 3);
      for (Eigen::Index i = 0; i < x1.size(); ++i) x1.data()[i] = u(rng);
      for (Eigen::Index i = 0; i < x2.rows(); ++i)
        for (Eigen::Index k = 0; k < 3; ++k) x2(i, k) = std::clamp(0.6 * x1(i, k) + 0.4 * u(rng), 0.0, 1.0);
      nn::ParameterSet p = m.parameters();
      worst["edcc_model"] = std::max(worst["edcc_model"],
                                     check_params(
                                         p, [&] { edcc::objective(m, x1, x2, true); },
                                         [&] { return edcc::objective(std::as_const(m), x1, x2).total; },
                                         [&] {
                                           std::vector<bool> on;
                                           for (std::size_t k = 0; k < 2; ++k) {
                                             const auto pass = edcc::detail::forward(m.modality[k], k == 0 ? x1 : x2);
                                             nn::append_relu_pattern(m.modality[k].encoder, pass.encoder, on);
                                             nn::append_relu_pattern(m.modality[k].decoder, pass.decoder, on);
                                           }
                                           return on;
                                         },
                                         skipped));
    }
  }
  const double secs = seconds_since(t0);
  bool ok = secs < 60.0;
  std::ostringstream s;
  for (const auto& [name, err] : worst) {
    const double limit = name == "jecl_block" || name == "edcc_model" ? 1e-3 : 1e-4;
    ok = ok && err <= limit;
    s << name << "=" << fmt("%.1e", err) << " ";
  }
  s << "kink-skipped=" << skipped << fmt(" (%.1fs)", secs);
  return {ok, s.str()};
}

// 2. loss_cca against Cholesky-whitened closed form.
Outcome cca_oracle() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed + 100);
    const Matrix a = randn(200, 5, rng);
    const Matrix b = a * randn(5, 5, rng) * 0.5 + randn(200, 5, rng);
    worst = std::max(worst, std::abs(nn::loss_cca(a, b).value + oracle::cca(a, b, 1e-4).sum()));
  }
  return {worst <= 1e-6, "max |diff| = " + fmt("%.2e", worst)};
}

// 3. Single-block MBPLS against SVD-based PLS; importance; deflation.
Outcome mbpls_oracle() {
  std::mt19937_64 rng(7);
  const Matrix x = randn(20, 5, rng);
  const Matrix y = x * randn(5, 5, rng) + randn(20, 5, rng, 0.5);
  double pred_err = 0.0, imp_err = 0.0, orth = 0.0;
  for (int k = 1; k <= 5; ++k) {
    const auto m = mbpls::fit({x}, y, static_cast<std::size_t>(k));
    pred_err = std::max(pred_err, (mbpls::predict(m, {x}) - oracle::pls(x, y, k).fitted).cwiseAbs().maxCoeff());
  }
  const Matrix x2 = randn(20, 3, rng);
  const auto m = mbpls::fit({x, x2}, y, 6);
  for (Eigen::Index k = 0; k < m.importance.cols(); ++k) imp_err = std::max(imp_err, std::abs(m.importance.col(k).sum() - 1.0));
  Matrix res = hconcat(x, x2);
  res = res.rowwise() - res.colwise().mean();
  for (Eigen::Index k = 0; k < m.super_scores.cols(); ++k) {
    const Vector t = m.super_scores.col(k);
    const Vector p = res.transpose() * t / t.squaredNorm();
    res -= t * p.transpose();
    orth = std::max(orth, (t.transpose() * res).cwiseAbs().maxCoeff() / t.norm());
  }
  const bool ok = pred_err <= 1e-8 && imp_err <= 1e-10 && orth <= 1e-8;
  return {ok, "prediction " + fmt("%.1e", pred_err) + ", importance " + fmt("%.1e", imp_err) + ", orthogonality " +
                  fmt("%.1e", orth)};
}

// 4. 32 x 7680 trial at 128 Hz -> 416 features.
Outcome dimension_law() {
  std::mt19937_64 rng(4);
  biomarkers::EegTrial t;
  t.sample_rate = 128.0;
  t.trial_id = "synthetic";
  t.channels = randn(32, 7680, rng);
  const auto f = biomarkers::extract_trial(t, biomarkers::default_selection());
  return {f.dim() == 416, std::to_string(f.dim()) + " features"};
}

// sigma 3 puts the raw-feature baseline roughly halfway between its
// noiseless score and chance. Hyperparameters were picked on seeds 100-104;
// seeds 0-4 below were not used for tuning.
pipeline::ExperimentConfig trend_config(std::uint64_t seed) {
  pipeline::ExperimentConfig c;
  c.seed = seed;
  c.data.synthetic.n_per_class = 500;
  c.data.synthetic.latent_dim = 6;
  c.data.synthetic.dims = {64, 32};
  c.data.synthetic.noise = 3.0;
  c.jecl.train.adam.learning_rate = 0.01;
  c.jecl.train.kld_weight = 0.03;
  c.mbpls.lv_start = 2;  // 40..120 exceeds the 64/32 feature ranks
  c.mbpls.lv_stop = 40;
  c.mbpls.lv_step = 2;
  c.edcc.train.epochs = 100;
  c.forest.n_estimators = {100};
  c.forest.max_depth = {8};
  return c;
}

// 5. Trend on the synthetic benchmark, mean test F1 over 5 seeds.
Outcome trend() {
  const auto t0 = Clock::now();
  std::map<std::pair<pipeline::SetupKind, Modality>, double> f1;
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    for (const auto& r : pipeline::run_experiment(trend_config(seed))) f1[{r.setup, r.modality}] += r.f1 / 5.0;
  const double secs = seconds_since(t0);
  using pipeline::SetupKind;
  const double base1 = f1[{SetupKind::baseline, Modality::eeg}], base2 = f1[{SetupKind::baseline, Modality::speech}];
  const double ssl1 = f1[{SetupKind::jec_ssl, Modality::eeg}], ssl2 = f1[{SetupKind::jec_ssl, Modality::speech}];
  const double jmml2 = f1[{SetupKind::jmml, Modality::speech}];
  const bool ok = jmml2 >= base2 + 2.0 && ssl1 >= base1 && ssl2 >= base2 && secs < 600.0;
  std::ostringstream s;
  s << "F1 m1/m2: baseline " << fmt("%.1f", base1) << "/" << fmt("%.1f", base2) << ", jec_ssl " << fmt("%.1f", ssl1)
    << "/" << fmt("%.1f", ssl2) << ", baseline_edcc " << fmt("%.1f", f1[{SetupKind::baseline_edcc, Modality::eeg}])
    << "/" << fmt("%.1f", f1[{SetupKind::baseline_edcc, Modality::speech}]) << ", jmml "
    << fmt("%.1f", f1[{SetupKind::jmml, Modality::eeg}]) << "/" << fmt("%.1f", jmml2) << fmt(" (%.0fs)", secs);
  return {ok, s.str()};
}

std::uint64_t fnv1a(const Vector& v, std::uint64_t h = 1469598103934665603ULL) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(v.size()) * sizeof(double); ++i) h = (h ^ bytes[i]) * 1099511628211ULL;
  return h;
}

std::uint64_t hash_inference(const edcc::EdccCaeModel& m, const Matrix& x) {
  std::uint64_t h = 1469598103934665603ULL;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto r = edcc::infer_single(m, 0, x.row(i).transpose());
    for (const Vector* v : {&r.s_rec, &r.x_rec, &r.encoded, &r.projection}) h = fnv1a(*v, h);
  }
  return h;
}

// 6. infer_single on modality 1 with and without modality-2 data anywhere.
Outcome missing_modality() {
  pipeline::SynthConfig sc;
  sc.n_per_class = 100;
  sc.dims = {16, 8};
  auto data = std::make_unique<pipeline::SynthResult>(pipeline::synth_bimodal(sc));
  edcc::EdccCaeModel m = edcc::build_edcc({16, 8}, 1.0, 4, jecl::Setup::setup3, 6);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& f = k == 0 ? data->modality1.features : data->modality2.features;
    m.modality[k].scaler = edcc::MinMaxScaler::fit(f);
  }
  const Matrix x1 = m.modality[0].scaler.transform(data->modality1.features);
  const Matrix x2 = m.modality[1].scaler.transform(data->modality2.features);
  edcc::TrainConfig tc;
  tc.epochs = 5;
  edcc::train_edcc(m, x1, x2, tc);
  const Matrix probe = x1.topRows(100);
  const std::uint64_t with = hash_inference(m, probe);

  // Checkpoint, drop every trace of modality 2, restore and rerun.
  const std::string saved = edcc::to_json(m).dump();
  data.reset();
  nn::json j = nn::json::parse(saved);
  edcc::EdccCaeModel restored = edcc::edcc_from_json(j);
  for (auto* net : {&restored.modality[1].encoder, &restored.modality[1].decoder, &restored.modality[1].projection,
                    &restored.modality[1].self_head, &restored.modality[1].cross_head})
    for (const auto& l : net->layers()) {
      l->weight.setConstant(std::numeric_limits<double>::quiet_NaN());
      l->bias.setConstant(std::numeric_limits<double>::quiet_NaN());
    }
  const std::uint64_t without = hash_inference(restored, probe);
  char buf[80];
  std::snprintf(buf, sizeof buf, "%016llx vs %016llx over 100 samples", static_cast<unsigned long long>(with),
                static_cast<unsigned long long>(without));
  return {with == without, buf};
}

pipeline::ExperimentConfig tiny_config() {
  pipeline::ExperimentConfig c;
  c.seed = 11;
  c.data.synthetic.n_per_class = 60;
  c.data.synthetic.dims = {12, 8};
  c.data.synthetic.latent_dim = 3;
  c.jecl.width_factor = 1.0;
  c.jecl.train.max_epochs = 10;
  c.mbpls.lv_start = 2;
  c.mbpls.lv_stop = 8;
  c.mbpls.folds = 3;
  c.edcc.width_factor = 1.0;
  c.edcc.projection_dim = 4;
  c.edcc.train.epochs = 5;
  c.forest.n_estimators = {10};
  c.forest.max_depth = {4};
  return c;
}

// 7. 8-row report in the four-setup, two-modality schema; same seed twice -> same JSON.
Outcome report_schema() {
  const auto cfg = tiny_config();
  const auto a = pipeline::run_experiment(cfg);
  const auto b = pipeline::run_experiment(cfg);
  const std::string table = pipeline::render_table(a, cfg.dimension);
  bool ok = a.size() == 8 && pipeline::to_json(a).dump() == pipeline::to_json(b).dump();
  const pipeline::SetupKind order[] = {pipeline::SetupKind::baseline, pipeline::SetupKind::jec_ssl,
                                       pipeline::SetupKind::baseline_edcc, pipeline::SetupKind::jmml};
  for (std::size_t i = 0; ok && i < 8; ++i)
    ok = a[i].setup == order[i / 2] && a[i].modality == (i % 2 == 0 ? Modality::eeg : Modality::speech) &&
         table.find(pipeline::setup_title(order[i / 2])) != std::string::npos && table.find(a[i].input) != std::string::npos;
  for (const char* col : {"Experiment Setup", "EEG Input", "Speech Input", "Acc", "F1"})
    ok = ok && table.find(col) != std::string::npos;
  return {ok, std::to_string(a.size()) + " rows, identical JSON across runs"};
}

// 8. Labels.
Outcome label_plumbing() {
  using namespace pipeline;
  bool ok = binarize_rating(4.5) == Polarity::positive && binarize_rating(4.49) == Polarity::negative &&
            binarize_rating(9.0) == Polarity::positive;
  ok = ok && relabel_categorical(Category::anger) == DimensionalLabel{EmotionDimension::valence, Polarity::negative} &&
       relabel_categorical(Category::happy) == DimensionalLabel{EmotionDimension::valence, Polarity::positive} &&
       relabel_categorical(Category::sad) == DimensionalLabel{EmotionDimension::arousal, Polarity::negative} &&
       relabel_categorical(Category::neutral) == DimensionalLabel{EmotionDimension::arousal, Polarity::positive};
  std::vector<Polarity> y(808, Polarity::positive);
  y.insert(y.end(), 472, Polarity::negative);
  std::vector<Polarity> balanced;
  for (std::size_t i : mco_oversample(y, 0)) balanced.push_back(y[i]);
  const auto c = class_counts(balanced);
  ok = ok && c[1] == 808 && c[0] == 808;
  return {ok, "MCO (808,472) -> (" + std::to_string(c[1]) + "," + std::to_string(c[0]) + ")"};
}

// 9. Tied similarity latent after training.
Outcome tied_latent() {
  bool ok = true;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::mt19937_64 rng(seed);
    jecl::JeclModel m = jecl::build_jecl(6, 3, jecl::Setup::setup3, 1.0, seed);
    std::vector<Matrix> groups;
    for (int c = 0; c < 3; ++c) groups.push_back(randn(15, 6, rng) + Matrix::Constant(15, 6, c));
    jecl::TrainConfig tc;
    tc.max_epochs = 30;
    jecl::train_jecl(m, groups, tc);
    const auto& ref = *m.blocks[0].sim.layer(1);
    for (const auto& b : m.blocks) {
      const auto& l = *b.sim.layer(1);
      ok = ok && l.weight.size() == ref.weight.size() &&
           std::memcmp(l.weight.data(), ref.weight.data(), sizeof(double) * static_cast<std::size_t>(ref.weight.size())) == 0 &&
           std::memcmp(l.bias.data(), ref.bias.data(), sizeof(double) * static_cast<std::size_t>(ref.bias.size())) == 0;
    }
    // Also through a checkpoint round trip.
    const auto back = jecl::jecl_from_json(jecl::to_json(m));
    for (const auto& b : back.blocks) ok = ok && b.sim.layer(1).get() == back.blocks[0].sim.layer(1).get();
  }
  return {ok, "similarity latent bit-identical across blocks after training"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"gradient suite", gradients},       {"CCA oracle", cca_oracle},
      {"MBPLS oracle", mbpls_oracle},      {"dimension law", dimension_law},
      {"trend reproduction", trend},       {"missing-modality guarantee", missing_modality},
      {"report schema and determinism", report_schema}, {"label plumbing", label_plumbing},
      {"tied latent", tied_latent},
  };
  int failed = 0, n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << "AC" << n << " " << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
  }
  std::cout << (n - failed) << "/" << n << " acceptance criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
