// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "qrsnap/ensemble.hpp"
#include "qrsnap/error.hpp"
#include "qrsnap/model.hpp"
#include "qrsnap/parallel.hpp"

using namespace qrsnap;

namespace {

Tensor random_batch(std::size_t n, const FeatureShape& s, std::uint64_t seed) {
  RngStream r(seed);
  Tensor t({n, s.channels, s.height, s.width});
  for (double& v : t.values()) v = r.uniform();
  return t;
}

Tensor random_targets(std::size_t n, std::size_t k, std::uint64_t seed) {
  RngStream r(seed);
  Tensor t({n, k});
  for (std::size_t i = 0; i < n; ++i) {
    const double lam = r.uniform();
    const std::size_t a = r.below(k), b = r.below(k);
    t[i * k + a] += lam;
    t[i * k + b] += 1 - lam;
  }
  return t;
}

Gradients run_backward(const ModelParams& p, const Tensor& x, const Tensor& y) {
  ForwardResult f = model_forward(p, x);
  loss_softmax_ce(f.tape, y);
  return backward(f.tape, p);
}

}  // namespace

TEST(Backward, ZeroLossGivesZeroGradients) {
  const Architecture arch = Architecture::parse("input=1x2x2;dense=3");
  ModelParams p = ModelParams::zeros(arch);
  p.at("dense1.bias")[0] = 1000.0;  // softmax saturates to exactly (1, 0, 0)
  const Tensor x = random_batch(2, arch.input(), 1);
  const Tensor y({2, 3}, std::vector<double>{1, 0, 0, 1, 0, 0});
  ForwardResult f = model_forward(p, x);
  EXPECT_EQ(loss_softmax_ce(f.tape, y), 0.0);
  const Gradients g = backward(f.tape, p);
  for (const auto& t : g.tensors())
    for (double v : t.value.values()) EXPECT_EQ(v, 0.0) << t.name;
}

TEST(Backward, DenseSoftmaxClosedForm) {
  const Architecture arch = Architecture::parse("input=2x3x1;dense=4");
  const ModelParams p = ModelParams::initialize(arch, RngStream(2));
  const std::size_t N = 3, I = 6, K = 4;
  const Tensor x = random_batch(N, arch.input(), 3);
  const Tensor y = random_targets(N, K, 4);
  const Gradients g = run_backward(p, x, y);

  // dW = (softmax - target)^T . input / N ; db = column mean of (softmax - target).
  std::vector<double> dw(K * I, 0.0), db(K, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    std::vector<double> z(K);
    for (std::size_t k = 0; k < K; ++k) {
      z[k] = p.at("dense1.bias")[k];
      for (std::size_t i = 0; i < I; ++i) z[k] += p.at("dense1.weight")[k * I + i] * x[n * I + i];
    }
    const std::vector<double> s = oracle::softmax(z);
    for (std::size_t k = 0; k < K; ++k) {
      const double d = (s[k] - y[n * K + k]) / N;
      db[k] += d;
      for (std::size_t i = 0; i < I; ++i) dw[k * I + i] += d * x[n * I + i];
    }
  }
  for (std::size_t j = 0; j < K * I; ++j) EXPECT_NEAR(g.at("dense1.weight")[j], dw[j], 1e-14);
  for (std::size_t k = 0; k < K; ++k) EXPECT_NEAR(g.at("dense1.bias")[k], db[k], 1e-14);
}

TEST(Backward, TwiceOnOneTapeIsRejected) {
  const Architecture arch = Architecture::parse("input=1x2x2;dense=2");
  const ModelParams p = ModelParams::initialize(arch, RngStream(5));
  ForwardResult f = model_forward(p, random_batch(1, arch.input(), 6));
  EXPECT_THROW(backward(f.tape, p), InvalidArgument);  // no loss yet
  loss_softmax_ce(f.tape, Tensor({1, 2}, std::vector<double>{1, 0}));
  backward(f.tape, p);
  EXPECT_THROW(backward(f.tape, p), InvalidArgument);
}

TEST(Backward, IndependentOfThreadCount) {
  const ModelParams p = ModelParams::initialize(Architecture::default_cnn(), RngStream(7));
  const Tensor x = random_batch(6, p.architecture().input(), 8);
  const Tensor y = random_targets(6, 4, 9);
  set_thread_count(1);
  const Gradients a = run_backward(p, x, y);
  set_thread_count(3);
  const Gradients b = run_backward(p, x, y);
  set_thread_count(0);
  EXPECT_EQ(a, b);
}

TEST(GradCheck, ZeroParameterModel) {
  const Architecture arch = Architecture::parse("input=4x1x1;relu;flatten");
  const ModelParams p = ModelParams::zeros(arch);
  EXPECT_EQ(p.parameter_count(), 0u);
  EXPECT_EQ(grad_check(p, random_batch(2, arch.input(), 1), random_targets(2, 4, 2), 1e-5), 0.0);
}

TEST(GradCheck, DefaultCnnAgreesWithFiniteDifferences) {
  const ModelParams p = ModelParams::initialize(Architecture::default_cnn(), RngStream(10));
  const Tensor x = random_batch(1, p.architecture().input(), 11);
  const Tensor y = random_targets(1, 4, 12);
  EXPECT_LT(grad_check(p, x, y, 1e-5, {8, 13}), 1e-4);
}

// Larger batches put more ReLU/max-pool kinks within reach of the finite
// difference; a smaller step keeps the central difference on one side.
TEST(GradCheck, DefaultCnnBatchAtSmallStep) {
  const ModelParams p = ModelParams::initialize(Architecture::default_cnn(), RngStream(10));
  const Tensor x = random_batch(4, p.architecture().input(), 11);
  const Tensor y = random_targets(4, 4, 12);
  EXPECT_LT(grad_check(p, x, y, 1e-6, {8, 13}), 1e-4);
}

TEST(GradCheck, AllEntriesOfSmallNet) {
  const Architecture arch = Architecture::parse("input=2x6x6;conv3x3=3;relu;maxpool2;dense=5;relu;dense=3");
  const ModelParams p = ModelParams::initialize(arch, RngStream(14));
  EXPECT_LT(grad_check(p, random_batch(3, arch.input(), 15), random_targets(3, 3, 16), 1e-5, {0, 0}), 1e-4);
}

TEST(GradCheck, DetectsCorruptedGradient) {
  const ModelParams p = ModelParams::initialize(Architecture::default_cnn(), RngStream(17));
  const Tensor x = random_batch(4, p.architecture().input(), 18);
  Tensor y({4, 4});
  for (std::size_t n = 0; n < 4; ++n) y[n * 4 + 2] = 1.0;  // every sample targets class 2
  Gradients g = run_backward(p, x, y);
  EXPECT_LT(grad_check_against(p, x, y, g, 1e-5), 1e-4);
  g.at("dense1.bias")[2] *= 2.0;
  EXPECT_GT(grad_check_against(p, x, y, g, 1e-5), 0.3);
}

TEST(GradCheck, EpsilonRange) {
  const Architecture arch = Architecture::parse("input=1x1x1;dense=2");
  const ModelParams p = ModelParams::zeros(arch);
  const Tensor x({1, 1, 1, 1}, 0.5);
  const Tensor y({1, 2}, std::vector<double>{1, 0});
  EXPECT_THROW(grad_check(p, x, y, 1e-8), InvalidArgument);
  EXPECT_THROW(grad_check(p, x, y, 1e-2), InvalidArgument);
}

class SgdTest : public ::testing::Test {
 protected:
  Architecture arch = Architecture::parse("input=1x1x1;dense=1");
  ModelParams params = ModelParams::zeros(arch);
  Gradients ones = [this] {
    Gradients g = ModelParams::zeros(arch);
    for (auto& t : g.tensors()) t.value[0] = 1.0;
    return g;
  }();
};

TEST_F(SgdTest, PlainStep) {
  ModelParams v;
  sgd_step(params, ones, 0.1, 0.0, v);
  EXPECT_DOUBLE_EQ(params.at("dense1.weight")[0], -0.1);
  EXPECT_DOUBLE_EQ(params.at("dense1.bias")[0], -0.1);
}

TEST_F(SgdTest, ZeroLrIsIdentity) {
  params.at("dense1.weight")[0] = 0.123456789;
  const ModelParams before = params;
  ModelParams v;
  sgd_step(params, ones, 0.0, 0.9, v);
  EXPECT_EQ(params, before);
}

TEST_F(SgdTest, MomentumRecurrence) {
  ModelParams v;
  sgd_step(params, ones, 1.0, 0.9, v);
  sgd_step(params, ones, 1.0, 0.9, v);
  EXPECT_DOUBLE_EQ(params.at("dense1.weight")[0], -2.9);
}

TEST_F(SgdTest, RejectsBadHyperparameters) {
  ModelParams v;
  EXPECT_THROW(sgd_step(params, ones, -1.0, 0.0, v), InvalidArgument);
  EXPECT_THROW(sgd_step(params, ones, 0.1, 1.0, v), InvalidArgument);
}
