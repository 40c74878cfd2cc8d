// Reference implementations used by the unit and acceptance tests. Each one
// is written from the textbook definition and shares no code with include/.
#pragma once

#include <Eigen/Dense>
#include <random>

#include "jmml/types.hpp"

namespace oracle {

using jmml::Matrix;
using jmml::Vector;

inline Matrix randn(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// Canonical correlations by Cholesky whitening: singular values of
// La^{-1} Sab Lb^{-T} with Saa = La La^T, Sbb = Lb Lb^T.
inline Vector cca(const Matrix& x, const Matrix& y, double reg) {
  const Eigen::MatrixXd a = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd b = y.rowwise() - y.colwise().mean();
  const double s = 1.0 / static_cast<double>(x.rows() - 1);
  Eigen::MatrixXd saa = s * a.transpose() * a;
  Eigen::MatrixXd sbb = s * b.transpose() * b;
  saa.diagonal().array() += reg;
  sbb.diagonal().array() += reg;
  const Eigen::MatrixXd sab = s * a.transpose() * b;
  const Eigen::LLT<Eigen::MatrixXd> la(saa), lb(sbb);
  const Eigen::MatrixXd left = la.matrixL().solve(sab);
  const Eigen::MatrixXd t = lb.matrixL().solve(left.transpose()).transpose();
  return Eigen::JacobiSVD<Eigen::MatrixXd>(t).singularValues();
}

// PLS2 on one concatenated block. Each weight is the dominant left singular
// vector of X^T Y of the deflated data, the closed form of the NIPALS fixed
// point. Returns the scores and the fitted values on the training rows.
struct Pls {
  Eigen::MatrixXd scores;
  Eigen::MatrixXd fitted;
};

inline Pls pls(const Matrix& x_in, const Matrix& y_in, int k) {
  const Eigen::RowVectorXd xm = x_in.colwise().mean(), ym = y_in.colwise().mean();
  Eigen::MatrixXd x = x_in.rowwise() - xm;
  Eigen::MatrixXd y = y_in.rowwise() - ym;
  const Eigen::MatrixXd x0 = x;
  Eigen::MatrixXd w(x.cols(), k), p(x.cols(), k), q(y.cols(), k), t(x.rows(), k);
  for (int c = 0; c < k; ++c) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x.transpose() * y, Eigen::ComputeThinU);
    w.col(c) = svd.matrixU().col(0);
    t.col(c) = x * w.col(c);
    const double tt = t.col(c).squaredNorm();
    p.col(c) = x.transpose() * t.col(c) / tt;
    q.col(c) = y.transpose() * t.col(c) / tt;
    x -= t.col(c) * p.col(c).transpose();
    y -= t.col(c) * q.col(c).transpose();
  }
  const Eigen::MatrixXd beta = w * (p.transpose() * w).inverse() * q.transpose();
  return {t, (x0 * beta).rowwise() + ym};
}

}  // namespace oracle
