#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "jmml/nn/adam.hpp"
#include "jmml/nn/dense.hpp"
#include "jmml/nn/grad_check.hpp"
#include "jmml/nn/losses.hpp"
#include "jmml/nn/serialize.hpp"
#include "oracles.hpp"

using namespace jmml;
using namespace jmml::nn;

namespace {

using oracle::randn;

Matrix rand01(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double lo = 0.05, double hi = 0.95) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Vector flat(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unflat(const Vector& v, Eigen::Index r, Eigen::Index c) { return Eigen::Map<const Matrix>(v.data(), r, c); }

}  // namespace

TEST(Dense, IdentityLinearLayer) {
  DenseNet net({3, 3}, {Activation::linear});
  net.layer(0)->weight = Matrix::Identity(3, 3);
  Matrix v(1, 3);
  v << 0.5, -2.0, 7.0;
  EXPECT_EQ(net.predict(v), v);
}

TEST(Dense, ReluOnNegativeInput) {
  DenseNet net({2, 2}, {Activation::relu});
  net.layer(0)->weight = Matrix::Identity(2, 2);
  Matrix v(1, 2);
  v << -1.0, -3.0;
  EXPECT_EQ(net.predict(v), Matrix::Zero(1, 2));
}

TEST(Dense, TwoLayerHandTrace) {
  DenseNet net({2, 3, 1}, {Activation::relu, Activation::linear});
  Matrix w1(2, 3);
  w1 << 1, -1, 0.5, 2, 0.25, -1;
  net.layer(0)->weight = w1;
  net.layer(0)->bias = Vector::Constant(3, 0.1);
  Matrix w2(3, 1);
  w2 << 1, 2, 3;
  net.layer(1)->weight = w2;
  net.layer(1)->bias = Vector::Constant(1, -0.5);
  Matrix x(1, 2);
  x << 1.0, 2.0;
  // hidden: [1+4+.1, -1+.5+.1, .5-2+.1] = [5.1, -0.4, -1.4] -> relu [5.1, 0, 0]
  EXPECT_NEAR(net.predict(x)(0, 0), 5.1 - 0.5, 1e-12);
}

TEST(Dense, ShapeErrors) {
  DenseNet net({4, 2}, {Activation::linear});
  EXPECT_THROW(net.predict(Matrix::Zero(1, 3)), ShapeError);
  EXPECT_THROW(DenseNet(std::vector<SharedLayerHandle>{make_layer(2, 3, Activation::relu), make_layer(4, 1, Activation::relu)}),
               ShapeError);
}

TEST(Dense, SharedHandleSeenByAllHolders) {
  auto shared = make_layer(3, 3, Activation::relu);
  DenseNet a({make_layer(2, 3, Activation::relu), shared});
  DenseNet b({make_layer(4, 3, Activation::relu), shared});
  std::mt19937_64 rng(1);
  a.init(rng);
  b.init(rng);
  ParameterSet p;
  p.add(a);
  p.add(b);
  EXPECT_EQ(p.layers().size(), 3u);  // shared layer counted once
  a.layer(1)->grad_weight.setConstant(1.0);
  adam_step(p, {});
  EXPECT_EQ(a.layer(1)->weight, b.layer(1)->weight);
  EXPECT_EQ(a.layer(1).get(), b.layer(1).get());
}

TEST(CosineKld, ZeroAtFixedPoint) {
  Vector v(4);
  v << 0.3, -1.0, 2.0, 0.5;
  EXPECT_NEAR(loss_cosine_kld(v, v, v, 1.0).value, 0.0, 1e-14);
}

TEST(CosineKld, OrthogonalIsOne) {
  Vector p(2), t(2);
  p << 1, 0;
  t << 0, 3;
  EXPECT_NEAR(loss_cosine_kld(p, t, Vector::Zero(2), 0.0).value, 1.0, 1e-15);
}

TEST(CosineKld, ZeroNormIsDegenerate) {
  EXPECT_THROW(loss_cosine_kld(Vector(Vector::Zero(3)), Vector(Vector::Ones(3)), Vector(Vector::Ones(3))), DegenerateVector);
}

TEST(CosineKld, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix pred = randn(5, 6, rng), target = randn(5, 6, rng);
    const Vector centroid = randn(6, 1, rng);
    const double w = 0.5 + static_cast<double>(seed % 3);
    const LossReport r = loss_cosine_kld(pred, target, centroid, w);
    const auto f = [&](const Vector& v) { return loss_cosine_kld(unflat(v, 5, 6), target, centroid, w).value; };
    EXPECT_LE(grad_check(f, flat(pred), flat(r.grad)).max_relative_error, 1e-4) << "seed " << seed;
  }
}

TEST(Bce, FairCoin) {
  EXPECT_NEAR(loss_bce(Matrix::Constant(3, 4, 0.5), Matrix::Constant(3, 4, 0.5)).value, std::log(2.0), 1e-15);
}

TEST(Bce, BoundaryIsClamped) {
  Matrix t(1, 4);
  t << 0, 1, 1, 0;
  const LossReport r = loss_bce(t, t);
  EXPECT_LE(r.value, 2e-7);
  EXPECT_TRUE(std::isfinite(r.value));
}

TEST(Bce, MinimizedAtTarget) {
  std::mt19937_64 rng(3);
  const Matrix t = rand01(4, 4, rng);
  const double at = loss_bce(t, t).value;
  for (double d : {-0.01, 0.01}) EXPECT_GT(loss_bce((t.array() + d).matrix(), t).value, at);
}

TEST(Bce, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix pred = rand01(4, 5, rng), target = rand01(4, 5, rng, 0.0, 1.0);
    const LossReport r = loss_bce(pred, target);
    const auto f = [&](const Vector& v) { return loss_bce(unflat(v, 4, 5), target).value; };
    EXPECT_LE(grad_check(f, flat(pred), flat(r.grad), 1e-6).max_relative_error, 1e-4) << "seed " << seed;
  }
}

TEST(Bce, LogitsFormAgreesWithSigmoid) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix z = randn(3, 4, rng, 2.0), t = rand01(3, 4, rng, 0.0, 1.0);
    const Matrix s = apply_activation(Activation::sigmoid, z);
    EXPECT_NEAR(loss_bce_logits(z, t).value, loss_bce(s, t).value, 1e-10);
    const LossReport r = loss_bce_logits(z, t);
    const auto f = [&](const Vector& v) { return loss_bce_logits(unflat(v, 3, 4), t).value; };
    EXPECT_LE(grad_check(f, flat(z), flat(r.grad)).max_relative_error, 1e-4);
  }
}

TEST(Cca, SelfCorrelationIsMinusD) {
  std::mt19937_64 rng(4);
  const Matrix a = randn(500, 5, rng);
  EXPECT_NEAR(loss_cca(a, a, 1e-4).value, -5.0, 1e-3);
}

TEST(Cca, IndependentViewsAreSmall) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix a = randn(2000, 5, rng), b = randn(2000, 5, rng);
    EXPECT_LE(std::abs(loss_cca(a, b).value), 0.25 * 5);
  }
}

TEST(Cca, OneDimensionalIsPearson) {
  std::mt19937_64 rng(5);
  const Matrix x = randn(300, 1, rng);
  const Matrix y = (-0.7 * x + 0.5 * randn(300, 1, rng)).eval();
  const double mx = x.mean(), my = y.mean();
  double sxy = 0, sxx = 0, syy = 0;
  for (Eigen::Index i = 0; i < 300; ++i) {
    sxy += (x(i, 0) - mx) * (y(i, 0) - my);
    sxx += (x(i, 0) - mx) * (x(i, 0) - mx);
    syy += (y(i, 0) - my) * (y(i, 0) - my);
  }
  const double pearson = sxy / std::sqrt(sxx * syy);
  EXPECT_NEAR(loss_cca(x, y, 1e-12).value, -std::abs(pearson), 1e-6);
}

TEST(Cca, MatchesWhiteningOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix z = randn(200, 5, rng);
    const Matrix a = z * randn(5, 5, rng) + 0.5 * randn(200, 5, rng);
    const Matrix b = z * randn(5, 5, rng) + 0.8 * randn(200, 5, rng);
    EXPECT_NEAR(loss_cca(a, b, 1e-4).value, -oracle::cca(a, b, 1e-4).sum(), 1e-6);
  }
}

TEST(Cca, Symmetry) {
  std::mt19937_64 rng(6);
  const Matrix a = randn(100, 4, rng), b = randn(100, 4, rng) + 0.5 * a;
  EXPECT_NEAR(loss_cca(a, b).value, loss_cca(b, a).value, 1e-10);
}

TEST(Cca, InvariantToInvertibleTransforms) {
  std::mt19937_64 rng(7);
  const Matrix a = randn(400, 4, rng), b = randn(400, 4, rng) + a;
  const Matrix m = randn(4, 4, rng) + 3.0 * Matrix::Identity(4, 4);
  // the ridge term is not transform invariant, so keep it negligible
  EXPECT_NEAR(loss_cca(a * m, b * m, 1e-10).value, loss_cca(a, b, 1e-10).value, 1e-8);
}

TEST(Cca, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix z = randn(30, 3, rng);
    const Matrix a = z * randn(3, 4, rng) + randn(30, 4, rng);
    const Matrix b = z * randn(3, 4, rng) + randn(30, 4, rng);
    const CcaReport r = loss_cca(a, b, 1e-3);
    const auto fa = [&](const Vector& v) { return loss_cca(unflat(v, 30, 4), b, 1e-3).value; };
    const auto fb = [&](const Vector& v) { return loss_cca(a, unflat(v, 30, 4), 1e-3).value; };
    EXPECT_LE(grad_check(fa, flat(a), flat(r.grad_a)).max_relative_error, 1e-4) << "seed " << seed;
    EXPECT_LE(grad_check(fb, flat(b), flat(r.grad_b)).max_relative_error, 1e-4) << "seed " << seed;
  }
}

TEST(Cca, GradientTwentyDimensional) {
  std::mt19937_64 rng(8);
  const Matrix a = randn(60, 20, rng), b = 0.3 * a + randn(60, 20, rng);
  const CcaReport r = loss_cca(a, b);
  const auto fa = [&](const Vector& v) { return loss_cca(unflat(v, 60, 20), b).value; };
  EXPECT_LE(grad_check(fa, flat(a), flat(r.grad_a)).max_relative_error, 1e-3);
}

TEST(Cca, Preconditions) {
  const Matrix a = Matrix::Random(5, 5);
  EXPECT_THROW(loss_cca(a, a), ShapeError);
  const Matrix b = Matrix::Random(20, 3);
  EXPECT_THROW(loss_cca(b, b, 0.0), InvalidArgument);
}

TEST(Adam, FirstStepMagnitude) {
  DenseLayer l(3, 2, Activation::linear);
  std::mt19937_64 rng(9);
  l.init_uniform(rng);
  const Matrix before = l.weight;
  l.grad_weight = randn(3, 2, rng);
  l.grad_bias = Vector::Zero(2);
  adam_step(l, {});
  const Matrix delta = (l.weight - before).cwiseAbs();
  EXPECT_GT(delta.minCoeff(), 0.0009);
  EXPECT_LE(delta.maxCoeff(), 0.001 + 1e-15);
  EXPECT_EQ(l.bias, Vector::Zero(2));  // zero gradient leaves params unchanged
}

TEST(Adam, HandTraceOnScalar) {
  Vector p(1), g(1), m = Vector::Zero(1), v = Vector::Zero(1);
  p << 1.0;
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  double hp = 1.0, hm = 0.0, hv = 0.0;
  for (std::size_t step = 1; step <= 2; ++step) {
    const double grad = 2.0 * hp;  // d/dp of p^2
    g << 2.0 * p[0];
    adam_update(p, g, m, v, step, cfg);
    hm = 0.9 * hm + 0.1 * grad;
    hv = 0.999 * hv + 0.001 * grad * grad;
    const double mh = hm / (1.0 - std::pow(0.9, step)), vh = hv / (1.0 - std::pow(0.999, step));
    hp -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(p[0], hp, 1e-15);
  }
}

TEST(Adam, NonFiniteGradientThrows) {
  DenseLayer l(2, 2, Activation::linear);
  l.grad_weight(0, 0) = std::nan("");
  EXPECT_THROW(adam_step(l, {}), NumericalError);
}

TEST(GradCheck, QuadraticIsExact) {
  std::mt19937_64 rng(10);
  const Matrix a = randn(6, 6, rng);
  const Matrix q = a.transpose() * a;
  const Vector x = randn(6, 1, rng);
  const auto f = [&](const Vector& v) { return 0.5 * v.dot(q * v); };
  EXPECT_LE(grad_check(f, x, q * x).max_relative_error, 1e-8);
}

TEST(GradCheck, NetworkWithCosineKld) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    DenseNet net({4, 6, 4}, {Activation::relu, Activation::linear});
    net.init(rng);
    const Matrix x = randn(5, 4, rng);
    const Vector c = randn(4, 1, rng);
    ParameterSet p;
    p.add(net);
    p.zero_grad();
    const auto cache = net.forward(x);
    net.backward(cache, loss_cosine_kld(cache.output(), x, c).grad);
    const Vector analytic = p.gradients();
    const Vector saved = p.values();
    const auto f = [&](const Vector& v) {
      p.set_values(v);
      const double val = loss_cosine_kld(net.predict(x), x, c).value;
      p.set_values(saved);
      return val;
    };
    EXPECT_LE(grad_check(f, saved, analytic).max_relative_error, 1e-4) << "seed " << seed;
  }
}

TEST(Serialize, RoundTripIsBitExact) {
  std::mt19937_64 rng(11);
  DenseNet net({3, 5, 2}, {Activation::relu, Activation::sigmoid});
  net.init(rng);
  net.layer(0)->bias = randn(5, 1, rng);
  const json j = wrap_checkpoint("test", net_to_json(net));
  const DenseNet back = net_from_json(unwrap_checkpoint(json::parse(j.dump()), "test"));
  ASSERT_EQ(back.depth(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.layer(i)->weight, net.layer(i)->weight);
    EXPECT_EQ(back.layer(i)->bias, net.layer(i)->bias);
    EXPECT_EQ(back.layer(i)->activation, net.layer(i)->activation);
  }
  EXPECT_THROW(unwrap_checkpoint(j, "other"), FormatError);
}

TEST(CosineKld, ZeroNormPolicy) {
  const Vector t = Vector::Ones(3), c = Vector::Zero(3);
  const LossReport r = loss_cosine_kld(Matrix::Zero(1, 3), Matrix(t.transpose()), c, 1.0, ZeroNorm::orthogonal);
  EXPECT_NEAR(r.value, 1.0, 1e-15);  // cos term 1, KL(uniform || uniform) 0
  EXPECT_EQ(r.grad, Matrix::Zero(1, 3));
  EXPECT_THROW(loss_cosine_kld(Matrix(t.transpose()), Matrix::Zero(1, 3), c, 1.0, ZeroNorm::orthogonal), DegenerateVector);
}

TEST(GradCheck, PiecewiseSkipsKinkCrossings) {
  // sum(relu(x)) with one entry 1e-6 from its kink: the plain check sees a
  // half slope there, the piecewise one skips exactly that coordinate.
  Vector x(3);
  x << 0.5, 1e-6, -0.7;
  const auto f = [](const Vector& v) { return v.cwiseMax(0.0).sum(); };
  const auto on = [](const Vector& v) {
    std::vector<bool> s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s.push_back(v[i] > 0.0);
    return s;
  };
  const Vector g = (x.array() > 0.0).cast<double>();
  EXPECT_GT(grad_check(f, x, g).max_relative_error, 0.1);
  const GradCheckResult r = grad_check_piecewise(f, on, x, g);
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_LE(r.max_relative_error, 1e-9);
}
