#pragma once

// The four training objectives: cosine + softmax-KL reconstruction loss,
// binary cross-entropy (on probabilities or on logits) and the negative
// canonical-correlation loss between two views.

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "jmml/error.hpp"
#include "jmml/types.hpp"

namespace jmml::nn {

// Scalar loss and its gradient with respect to the prediction.
struct LossReport {
  double value = 0.0;
  Matrix grad;
};

namespace detail {

inline Vector softmax(const Vector& z) {
  const double mx = z.maxCoeff();
  Vector e = (z.array() - mx).exp();
  return e / e.sum();
}

inline Vector log_softmax(const Vector& z) {
  const double mx = z.maxCoeff();
  const double lse = mx + std::log((z.array() - mx).exp().sum());
  return z.array() - lse;
}

}  // namespace detail

// What to do with a zero-norm prediction row. `raise` throws; `orthogonal`
// scores the row as cos = 0 with zero cosine gradient, which lets training
// step past a dead-ReLU output (the KL term still pulls it away).
enum class ZeroNorm { raise, orthogonal };

// Per-row (1 - cos(pred, target)) + kld_weight * KL(softmax(pred) || softmax(centroid)),
// averaged over rows.
inline LossReport loss_cosine_kld(const Matrix& pred, const Matrix& target, const Vector& centroid,
                                  double kld_weight = 1.0, ZeroNorm zero_norm = ZeroNorm::raise) {
  require_shape(pred.rows() == target.rows() && pred.cols() == target.cols(), "loss_cosine_kld: pred/target shape");
  require_shape(pred.cols() == centroid.size(), "loss_cosine_kld: centroid dim");
  require(kld_weight >= 0.0, "loss_cosine_kld: kld_weight must be >= 0");
  require_shape(pred.rows() >= 1, "loss_cosine_kld: empty batch");
  const double rows = static_cast<double>(pred.rows());
  const Vector log_q = detail::log_softmax(centroid);

  LossReport r;
  r.grad.resize(pred.rows(), pred.cols());
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    const Vector p = pred.row(i).transpose();
    const Vector t = target.row(i).transpose();
    const double np = p.norm(), nt = t.norm();
    if (nt == 0.0 || (np == 0.0 && zero_norm == ZeroNorm::raise))
      throw DegenerateVector("loss_cosine_kld: zero-norm vector");
    const double cos = np == 0.0 ? 0.0 : p.dot(t) / (np * nt);
    Vector g = np == 0.0 ? Vector(Vector::Zero(p.size())) : Vector(-(t / (np * nt) - cos * p / (np * np)));
    double value = 1.0 - cos;
    if (kld_weight > 0.0) {
      const Vector log_s = detail::log_softmax(p);
      const Vector s = log_s.array().exp();
      const Vector log_ratio = log_s - log_q;
      const double kl = s.dot(log_ratio);
      value += kld_weight * kl;
      g += kld_weight * s.cwiseProduct((log_ratio.array() - kl).matrix());
    }
    r.value += value / rows;
    r.grad.row(i) = g.transpose() / rows;
  }
  return r;
}

inline LossReport loss_cosine_kld(const Vector& pred, const Vector& target, const Vector& centroid,
                                  double kld_weight = 1.0) {
  return loss_cosine_kld(Matrix(pred.transpose()), Matrix(target.transpose()), centroid, kld_weight);
}

inline constexpr double kBceEpsilon = 1e-7;

// Mean elementwise binary cross-entropy with predictions clamped to
// [eps, 1 - eps]. Clamped entries carry zero gradient.
inline LossReport loss_bce(const Matrix& pred, const Matrix& target) {
  require_shape(pred.rows() == target.rows() && pred.cols() == target.cols(), "loss_bce: shape mismatch");
  require_shape(pred.size() > 0, "loss_bce: empty input");
  const double count = static_cast<double>(pred.size());
  LossReport r;
  r.grad.resize(pred.rows(), pred.cols());
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double raw = pred.data()[i];
    const double p = std::clamp(raw, kBceEpsilon, 1.0 - kBceEpsilon);
    const double t = target.data()[i];
    r.value -= (t * std::log(p) + (1.0 - t) * std::log(1.0 - p)) / count;
    const bool clamped = raw < kBceEpsilon || raw > 1.0 - kBceEpsilon;
    r.grad.data()[i] = clamped ? 0.0 : (p - t) / (p * (1.0 - p)) / count;
  }
  return r;
}

// BCE of sigmoid(logits) against target, evaluated in the stable
// log-sum-exp form. Gradient is with respect to the logits.
inline LossReport loss_bce_logits(const Matrix& logits, const Matrix& target) {
  require_shape(logits.rows() == target.rows() && logits.cols() == target.cols(), "loss_bce_logits: shape mismatch");
  require_shape(logits.size() > 0, "loss_bce_logits: empty input");
  const double count = static_cast<double>(logits.size());
  LossReport r;
  r.grad.resize(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double z = logits.data()[i];
    const double t = target.data()[i];
    // -t log s(z) - (1-t) log(1-s(z)) = max(z,0) - z t + log(1 + e^{-|z|})
    r.value += (std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)))) / count;
    const double s = 1.0 / (1.0 + std::exp(-z));
    r.grad.data()[i] = (s - t) / count;
  }
  return r;
}

struct CcaReport {
  double value = 0.0;  // negative sum of canonical correlations
  Matrix grad_a;
  Matrix grad_b;
  Vector correlations;  // descending
};

namespace detail {

// Returns S^{-1/2} for a symmetric positive definite S.
inline Matrix inverse_sqrt_spd(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  if (eig.info() != Eigen::Success) throw NumericalError("loss_cca: eigendecomposition failed");
  const Vector& ev = eig.eigenvalues();
  if (!ev.allFinite() || ev.minCoeff() <= 0.0) throw NumericalError("loss_cca: covariance not positive definite");
  const Eigen::MatrixXd& q = eig.eigenvectors();
  return q * ev.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
}

}  // namespace detail

// -sum of singular values of T = Saa^{-1/2} Sab Sbb^{-1/2}, where the
// covariances are computed from column-centered views (rows are samples,
// normalized by n-1) and the auto-covariances are ridge-regularized by reg*I.
inline CcaReport loss_cca(const Matrix& view_a, const Matrix& view_b, double reg = 1e-4) {
  require_shape(view_a.rows() == view_b.rows(), "loss_cca: views have different sample counts");
  require(reg > 0.0, "loss_cca: reg must be positive");
  const Eigen::Index n = view_a.rows();
  const Eigen::Index da = view_a.cols(), db = view_b.cols();
  require_shape(n >= std::max(da, db) + 1, "loss_cca: batch must exceed view dimension");

  const Matrix a = view_a.rowwise() - view_a.colwise().mean();
  const Matrix b = view_b.rowwise() - view_b.colwise().mean();
  const double scale = 1.0 / static_cast<double>(n - 1);
  const Matrix saa = scale * a.transpose() * a + reg * Matrix::Identity(da, da);
  const Matrix sbb = scale * b.transpose() * b + reg * Matrix::Identity(db, db);
  const Matrix sab = scale * a.transpose() * b;

  const Matrix saa_is = detail::inverse_sqrt_spd(saa);
  const Matrix sbb_is = detail::inverse_sqrt_spd(sbb);
  const Matrix t = saa_is * sab * sbb_is;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector d = svd.singularValues();
  if (!d.allFinite()) throw NumericalError("loss_cca: SVD failed");
  const Eigen::MatrixXd& u = svd.matrixU();
  const Eigen::MatrixXd& v = svd.matrixV();

  // Gradients of the correlation sum with respect to the covariances.
  const Matrix g_ab = saa_is * u * v.transpose() * sbb_is;
  const Matrix g_aa = -0.5 * saa_is * u * d.asDiagonal() * u.transpose() * saa_is;
  const Matrix g_bb = -0.5 * sbb_is * v * d.asDiagonal() * v.transpose() * sbb_is;

  CcaReport r;
  r.correlations = d;
  r.value = -d.sum();
  r.grad_a = -scale * (2.0 * a * g_aa + b * g_ab.transpose());
  r.grad_b = -scale * (2.0 * b * g_bb + a * g_ab);
  return r;
}

}  // namespace jmml::nn
