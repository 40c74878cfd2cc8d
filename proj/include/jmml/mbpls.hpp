#pragma once

// Multiblock partial least squares (NIPALS with super scores). Several input
// blocks are regressed jointly on one target; each latent variable gets a
// super score built from per-block scores weighted by normalized super
// weights, whose squares are the per-block importance of that LV.

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "jmml/error.hpp"
#include "jmml/nn/serialize.hpp"
#include "jmml/types.hpp"

namespace jmml::mbpls {

struct FitOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 500;
};

struct MbplsModel {
  std::size_t components = 0;  // effective K
  std::vector<std::size_t> block_dims;
  RowVector x_mean;  // concatenated block means
  RowVector y_mean;

  Matrix weights;         // W: stacked super-level weights, sum(dims) x K
  Matrix loadings;        // P: stacked block loadings, sum(dims) x K
  Matrix target_loadings; // V: target dims x K
  Matrix super_scores;    // T_s: samples x K
  Matrix target_scores;   // U: samples x K
  Matrix super_weights;   // blocks x K, unit columns
  Matrix importance;      // blocks x K, columns sum to 1
  Matrix beta;            // sum(dims) x target dims, for all K components

  std::vector<double> explained_target_variance;  // cumulative fraction after each LV
  double target_residual_norm = 0.0;              // ||E_X||_F on training data
  std::vector<double> block_residual_norms;       // ||E_j||_F on training data
  std::vector<std::string> warnings;

  std::size_t input_dim() const { return static_cast<std::size_t>(x_mean.size()); }
  std::size_t target_dim() const { return static_cast<std::size_t>(y_mean.size()); }
};

namespace detail {

inline Matrix concat_blocks(const std::vector<Matrix>& blocks) {
  require_shape(!blocks.empty(), "mbpls: no blocks");
  Eigen::Index cols = 0;
  for (const auto& b : blocks) {
    require_shape(b.rows() == blocks.front().rows(), "mbpls: blocks have different sample counts");
    cols += b.cols();
  }
  Matrix x(blocks.front().rows(), cols);
  Eigen::Index pos = 0;
  for (const auto& b : blocks) {
    x.middleCols(pos, b.cols()) = b;
    pos += b.cols();
  }
  return x;
}

inline std::size_t numerical_rank(const Matrix& centered) {
  if (centered.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered);
  const Vector s = svd.singularValues();
  if (s.size() == 0 || s[0] <= 0.0) return 0;
  const double tol = s[0] * 1e-10 * static_cast<double>(std::max(centered.rows(), centered.cols()));
  return static_cast<std::size_t>((s.array() > tol).count());
}

}  // namespace detail

// Regression map for the first k components.
inline Matrix regression_coefficients(const MbplsModel& m, std::size_t k) {
  k = std::min(k, m.components);
  if (k == 0) return Matrix::Zero(static_cast<Eigen::Index>(m.input_dim()), static_cast<Eigen::Index>(m.target_dim()));
  const auto kk = static_cast<Eigen::Index>(k);
  const Matrix w = m.weights.leftCols(kk);
  const Matrix ptw = m.loadings.leftCols(kk).transpose() * w;
  return w * ptw.fullPivLu().solve(m.target_loadings.leftCols(kk).transpose());
}

// Fits K latent variables. Blocks and target are mean-centered (not scaled)
// and the offsets kept in the model. Extraction stops early, with a warning,
// once the deflated blocks carry no more variance.
inline MbplsModel fit(const std::vector<Matrix>& blocks, const Matrix& target, std::size_t k,
                      const FitOptions& opt = {}) {
  const Matrix x_raw = detail::concat_blocks(blocks);
  require_shape(target.rows() == x_raw.rows(), "mbpls::fit: target sample count differs from blocks");
  const Eigen::Index n = x_raw.rows();
  require(n >= 2, "mbpls::fit: need at least 2 samples");
  require(k >= 1, "mbpls::fit: K must be >= 1");
  require(k <= std::min(static_cast<std::size_t>(n - 1), static_cast<std::size_t>(x_raw.cols())),
          "mbpls::fit: K exceeds min(samples - 1, total block dims)");

  MbplsModel m;
  for (const auto& b : blocks) m.block_dims.push_back(static_cast<std::size_t>(b.cols()));
  m.x_mean = x_raw.colwise().mean();
  m.y_mean = target.colwise().mean();
  Matrix x = x_raw.rowwise() - m.x_mean;
  Matrix y = target.rowwise() - m.y_mean;
  const double y_ss = y.squaredNorm();
  const double x_ss = x.squaredNorm();

  const auto nb = static_cast<Eigen::Index>(blocks.size());
  std::vector<Eigen::Index> offsets(blocks.size() + 1, 0);
  for (std::size_t b = 0; b < blocks.size(); ++b) offsets[b + 1] = offsets[b] + blocks[b].cols();
  auto block = [&](Matrix& mat, std::size_t b) { return mat.middleCols(offsets[b], offsets[b + 1] - offsets[b]); };

  const auto kk = static_cast<Eigen::Index>(k);
  m.weights = Matrix::Zero(x.cols(), kk);
  m.loadings = Matrix::Zero(x.cols(), kk);
  m.target_loadings = Matrix::Zero(y.cols(), kk);
  m.super_scores = Matrix::Zero(n, kk);
  m.target_scores = Matrix::Zero(n, kk);
  m.super_weights = Matrix::Zero(nb, kk);
  m.importance = Matrix::Zero(nb, kk);

  std::size_t done = 0;
  for (Eigen::Index c = 0; c < kk; ++c) {
    if (x.squaredNorm() <= 1e-20 * std::max(x_ss, 1e-300) || y.squaredNorm() <= 1e-20 * std::max(y_ss, 1e-300)) {
      m.warnings.push_back("mbpls: residual exhausted after " + std::to_string(done) + " of " + std::to_string(k) +
                           " latent variables; K reduced");
      break;
    }
    Eigen::Index best_col = 0;
    (y.colwise().squaredNorm()).maxCoeff(&best_col);
    Vector u = y.col(best_col);

    Vector w_super(nb);
    Matrix w_blocks = Matrix::Zero(x.cols(), 1);
    Vector t_super = Vector::Zero(n);
    bool converged = false;
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
      Matrix t_blocks(n, nb);
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        Vector wb = block(x, b).transpose() * u;
        const double norm = wb.norm();
        if (norm > 0.0) wb /= norm;
        w_blocks.block(offsets[b], 0, offsets[b + 1] - offsets[b], 1) = wb;
        t_blocks.col(static_cast<Eigen::Index>(b)) = block(x, b) * wb;
      }
      w_super = t_blocks.transpose() * u;
      const double ws_norm = w_super.norm();
      if (ws_norm == 0.0) break;
      w_super /= ws_norm;
      const Vector t_new = t_blocks * w_super;
      const double tt = t_new.squaredNorm();
      if (tt == 0.0) break;
      const Vector v = y.transpose() * t_new / tt;
      const double vv = v.squaredNorm();
      if (vv == 0.0) break;
      u = y * v / vv;
      const double change = (t_new - t_super).norm() / std::sqrt(tt);
      t_super = t_new;
      if (it > 0 && change < opt.tolerance) {
        converged = true;
        break;
      }
    }

    Vector w_full(x.cols());
    if (converged) {
      for (std::size_t b = 0; b < blocks.size(); ++b)
        w_full.segment(offsets[b], offsets[b + 1] - offsets[b]) =
            w_super[static_cast<Eigen::Index>(b)] * w_blocks.block(offsets[b], 0, offsets[b + 1] - offsets[b], 1);
    } else {
      // Fixed point of the iteration: dominant left singular vector of X^T Y.
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(x.transpose() * y), Eigen::ComputeThinU);
      w_full = svd.matrixU().col(0);
      const Vector proj = x.transpose() * u;
      if (w_full.dot(proj) < 0.0) w_full = -w_full;
      for (std::size_t b = 0; b < blocks.size(); ++b)
        w_super[static_cast<Eigen::Index>(b)] = w_full.segment(offsets[b], offsets[b + 1] - offsets[b]).norm();
      m.warnings.push_back("mbpls: NIPALS did not converge for LV " + std::to_string(c + 1) + "; used SVD");
    }

    const Vector t = x * w_full;
    const double tt = t.squaredNorm();
    if (tt <= 1e-24 * std::max(x_ss, 1e-300)) {
      m.warnings.push_back("mbpls: rank exhausted after " + std::to_string(done) + " of " + std::to_string(k) +
                           " latent variables; K reduced");
      break;
    }
    const Vector p = x.transpose() * t / tt;
    const Vector v = y.transpose() * t / tt;
    const double vv = v.squaredNorm();
    m.weights.col(c) = w_full;
    m.loadings.col(c) = p;
    m.target_loadings.col(c) = v;
    m.super_scores.col(c) = t;
    m.target_scores.col(c) = vv > 0.0 ? Vector(y * v / vv) : Vector::Zero(n);
    m.super_weights.col(c) = w_super;
    m.importance.col(c) = w_super.cwiseAbs2() / w_super.squaredNorm();

    x -= t * p.transpose();
    y -= t * v.transpose();
    ++done;
    m.explained_target_variance.push_back(y_ss > 0.0 ? 1.0 - y.squaredNorm() / y_ss : 1.0);
  }

  m.components = done;
  const auto kd = static_cast<Eigen::Index>(done);
  m.weights.conservativeResize(Eigen::NoChange, kd);
  m.loadings.conservativeResize(Eigen::NoChange, kd);
  m.target_loadings.conservativeResize(Eigen::NoChange, kd);
  m.super_scores.conservativeResize(Eigen::NoChange, kd);
  m.target_scores.conservativeResize(Eigen::NoChange, kd);
  m.super_weights.conservativeResize(Eigen::NoChange, kd);
  m.importance.conservativeResize(Eigen::NoChange, kd);
  m.beta = regression_coefficients(m, done);
  m.target_residual_norm = y.norm();
  for (std::size_t b = 0; b < blocks.size(); ++b) m.block_residual_norms.push_back(block(x, b).norm());
  return m;
}

// Prediction with the first k components (all by default).
inline Matrix predict(const MbplsModel& m, const std::vector<Matrix>& blocks, std::size_t k) {
  require_shape(blocks.size() == m.block_dims.size(), "mbpls::predict: block count mismatch");
  for (std::size_t b = 0; b < blocks.size(); ++b)
    require_shape(static_cast<std::size_t>(blocks[b].cols()) == m.block_dims[b], "mbpls::predict: block dim mismatch");
  const Matrix x = detail::concat_blocks(blocks).rowwise() - m.x_mean;
  const Matrix beta = k >= m.components ? m.beta : regression_coefficients(m, k);
  return (x * beta).rowwise() + m.y_mean;
}

inline Matrix predict(const MbplsModel& m, const std::vector<Matrix>& blocks) {
  return predict(m, blocks, m.components);
}

// Inclusive arithmetic grid start, start+step, ..., <= stop.
inline std::vector<std::size_t> lv_grid(std::size_t start = 40, std::size_t stop = 120, std::size_t step = 2) {
  require(step >= 1 && start >= 1 && start <= stop, "lv_grid: invalid range");
  std::vector<std::size_t> g;
  for (std::size_t k = start; k <= stop; k += step) g.push_back(k);
  return g;
}

struct TuneResult {
  std::size_t best_k = 0;
  std::vector<std::size_t> grid;  // after clipping and de-duplication
  std::vector<double> cv_error;   // mean squared prediction error per grid value
};

// K-fold cross-validated choice of K. Grid values are clipped to what every
// fold can support (numerical rank, samples - 1); ties go to the smaller K.
inline TuneResult tune_lv(const std::vector<Matrix>& blocks, const Matrix& target, const std::vector<std::size_t>& grid,
                          std::size_t folds = 5, std::uint64_t seed = 0, const FitOptions& opt = {}) {
  require(!grid.empty(), "tune_lv: empty grid");
  const Matrix x_all = detail::concat_blocks(blocks);
  const auto n = static_cast<std::size_t>(x_all.rows());
  require_shape(static_cast<std::size_t>(target.rows()) == n, "tune_lv: target sample count differs");
  folds = std::clamp<std::size_t>(folds, 2, n);

  TuneResult r;
  if (grid.size() == 1) {
    r.best_k = grid.front();
    r.grid = grid;
    r.cv_error = {0.0};
    return r;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t smallest_train = n - (n + folds - 1) / folds;
  const Matrix x_centered = x_all.rowwise() - x_all.colwise().mean();
  const std::size_t cap = std::max<std::size_t>(
      1, std::min({detail::numerical_rank(x_centered), smallest_train - 1, static_cast<std::size_t>(x_all.cols())}));
  for (std::size_t g : grid) r.grid.push_back(std::clamp<std::size_t>(g, 1, cap));
  std::sort(r.grid.begin(), r.grid.end());
  r.grid.erase(std::unique(r.grid.begin(), r.grid.end()), r.grid.end());
  if (r.grid.size() == 1) {
    r.best_k = r.grid.front();
    r.cv_error = {0.0};
    return r;
  }
  const std::size_t k_max = r.grid.back();

  r.cv_error.assign(r.grid.size(), 0.0);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < n; ++i) (i % folds == f ? te : tr).push_back(order[i]);
    std::vector<Matrix> btr, bte;
    for (const auto& b : blocks) {
      btr.push_back(take_rows(b, tr));
      bte.push_back(take_rows(b, te));
    }
    const Matrix ytr = take_rows(target, tr);
    const Matrix yte = take_rows(target, te);
    const MbplsModel m = fit(btr, ytr, std::min(k_max, tr.size() - 1), opt);
    for (std::size_t g = 0; g < r.grid.size(); ++g) {
      const Matrix pred = predict(m, bte, r.grid[g]);
      r.cv_error[g] += (pred - yte).squaredNorm() / static_cast<double>(yte.size()) / static_cast<double>(folds);
    }
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < r.grid.size(); ++g)
    if (r.cv_error[g] < r.cv_error[best] * (1.0 - 1e-12)) best = g;
  r.best_k = r.grid[best];
  return r;
}

inline nn::json to_json(const MbplsModel& m) {
  return nn::wrap_checkpoint("mbpls", {{"components", m.components},
                                       {"block_dims", m.block_dims},
                                       {"x_mean", nn::vector_to_json(m.x_mean.transpose())},
                                       {"y_mean", nn::vector_to_json(m.y_mean.transpose())},
                                       {"weights", nn::matrix_to_json(m.weights)},
                                       {"loadings", nn::matrix_to_json(m.loadings)},
                                       {"target_loadings", nn::matrix_to_json(m.target_loadings)},
                                       {"super_weights", nn::matrix_to_json(m.super_weights)},
                                       {"importance", nn::matrix_to_json(m.importance)},
                                       {"beta", nn::matrix_to_json(m.beta)},
                                       {"explained_target_variance", m.explained_target_variance},
                                       {"target_residual_norm", m.target_residual_norm},
                                       {"block_residual_norms", m.block_residual_norms},
                                       {"warnings", m.warnings}});
}

// Training-time scores are not persisted; a loaded model predicts identically.
inline MbplsModel mbpls_from_json(const nn::json& j) {
  const auto& p = nn::unwrap_checkpoint(j, "mbpls");
  MbplsModel m;
  m.components = p.at("components").get<std::size_t>();
  m.block_dims = p.at("block_dims").get<std::vector<std::size_t>>();
  m.x_mean = nn::vector_from_json(p.at("x_mean")).transpose();
  m.y_mean = nn::vector_from_json(p.at("y_mean")).transpose();
  m.weights = nn::matrix_from_json(p.at("weights"));
  m.loadings = nn::matrix_from_json(p.at("loadings"));
  m.target_loadings = nn::matrix_from_json(p.at("target_loadings"));
  m.super_weights = nn::matrix_from_json(p.at("super_weights"));
  m.importance = nn::matrix_from_json(p.at("importance"));
  m.beta = nn::matrix_from_json(p.at("beta"));
  m.explained_target_variance = p.at("explained_target_variance").get<std::vector<double>>();
  m.target_residual_norm = p.at("target_residual_norm").get<double>();
  m.block_residual_norms = p.at("block_residual_norms").get<std::vector<double>>();
  m.warnings = p.at("warnings").get<std::vector<std::string>>();
  return m;
}

}  // namespace jmml::mbpls
