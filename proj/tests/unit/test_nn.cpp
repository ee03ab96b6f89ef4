#include <random>

#include <gtest/gtest.h>

#include "sparsestep/nn.hpp"
#include "sparsestep/normalizer.hpp"

using namespace sparsestep;

class MlpGradient : public ::testing::TestWithParam<Activation> {};

TEST_P(MlpGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(1);
  Mlp<double> net(5, {7, 6}, 3, GetParam());
  net.init(rng);
  for (Eigen::Index i = 0; i < net.params().size(); ++i) net.params()[i] += 0.05 * std::sin(i);
  MatX<double> x = MatX<double>::Random(5, 4);
  MatX<double> w = MatX<double>::Random(3, 4);
  auto loss = [&](const Mlp<double>& m) { return (m.forward(x).array() * w.array()).sum(); };

  Mlp<double>::Cache cache;
  net.forward(x, cache);
  VecX<double> grad = VecX<double>::Zero(net.num_params());
  const MatX<double> dx = net.backward(cache, w, grad);
  const double h = 1e-6;
  for (int i = 0; i < net.num_params(); ++i) {
    Mlp<double> p = net, q = net;
    p.params()[i] += h;
    q.params()[i] -= h;
    const double fd = (loss(p) - loss(q)) / (2 * h);
    EXPECT_NEAR(grad[i], fd, 1e-6 * std::max(1.0, std::abs(fd))) << i;
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const MatX<double> x0 = x;
    x.data()[i] += h;
    const double lp = loss(net);
    x.data()[i] -= 2 * h;
    const double lm = loss(net);
    x = x0;
    EXPECT_NEAR(dx.data()[i], (lp - lm) / (2 * h), 1e-6);
  }
}

INSTANTIATE_TEST_SUITE_P(Activations, MlpGradient,
                         ::testing::Values(Activation::kElu, Activation::kTanh, Activation::kRelu));

TEST(Mlp, ParameterLayout) {
  Mlp<float> net(4, {3}, 2);
  EXPECT_EQ(net.num_params(), 4 * 3 + 3 + 3 * 2 + 2);
  EXPECT_THROW(Mlp<float>(0, {3}, 2), std::invalid_argument);
}

TEST(Adam, MinimizesQuadratic) {
  VecX<double> p = VecX<double>::Constant(3, 5.0);
  Adam<double> opt(3, 0.1);
  for (int i = 0; i < 2000; ++i) {
    VecX<double> g = 2.0 * p;
    opt.step(p, g);
  }
  EXPECT_LT(p.norm(), 1e-3);
}

TEST(Adam, ClipsGlobalNorm) {
  VecX<double> p = VecX<double>::Zero(2);
  VecX<double> g(2);
  g << 30.0, 40.0;
  Adam<double> opt(2);
  opt.step(p, g, 1.0);
  EXPECT_NEAR(g.norm(), 1.0, 1e-5);
}

TEST(Normalizer, MatchesBatchStatistics) {
  std::mt19937_64 rng(2);
  std::normal_distribution<float> n(3.0f, 2.0f);
  RunningNormalizer norm(2);
  MatX<float> all(2, 3000);
  for (Eigen::Index i = 0; i < all.size(); ++i) all.data()[i] = n(rng);
  for (int k = 0; k < 3; ++k) norm.update(all.middleCols(k * 1000, 1000));
  const VecX<float> mean = all.rowwise().mean();
  EXPECT_NEAR(norm.mean()[0], mean[0], 1e-4);
  const double var = (all.row(1).array() - all.row(1).mean()).square().mean();
  EXPECT_NEAR(norm.variance()[1], var, 1e-3);
  EXPECT_EQ(norm.count(), 3000.0);
  MatX<float> big = MatX<float>::Constant(2, 1, 1e6f);
  EXPECT_FLOAT_EQ(norm.normalize(big)(0, 0), 5.0f);
}

TEST(Normalizer, FrozenIgnoresUpdates) {
  RunningNormalizer norm(1);
  norm.frozen = true;
  norm.update(MatX<float>::Constant(1, 10, 4.0f));
  EXPECT_EQ(norm.count(), 0.0);
}
