// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "qrsnap/ensemble.hpp"
#include "qrsnap/error.hpp"
#include "qrsnap/model.hpp"
#include "qrsnap/tensor.hpp"

using namespace qrsnap;

TEST(Tensor, ShapeValidation) {
  EXPECT_THROW(Tensor({2, 0}), InvalidArgument);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), InvalidArgument);
  const Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(shape_string(t.shape()), "[2x3]");
  EXPECT_TRUE(t.all_finite());
}

TEST(Architecture, ParseAndRoundTrip) {
  const std::string text = "input=3x32x32;conv3x3=8;relu;maxpool2;conv3x3=16;relu;maxpool2;flatten;dense=4";
  const Architecture a = Architecture::parse(text);
  EXPECT_EQ(a, Architecture::default_cnn());
  EXPECT_EQ(a.to_string(), text);
  EXPECT_EQ(a.output_size(), 4u);
  EXPECT_EQ(a.activations()[3], (FeatureShape{8, 16, 16}));
}

TEST(Architecture, RejectsBadText) {
  EXPECT_THROW(Architecture::parse("conv3x3=8"), InvalidArgument);
  EXPECT_THROW(Architecture::parse("input=3x4x4;conv2x2=1"), InvalidArgument);
  EXPECT_THROW(Architecture::parse("input=1x2x2;maxpool4"), InvalidArgument);
  EXPECT_THROW(Architecture::parse("input=1x2x2;bogus"), InvalidArgument);
}

TEST(ModelParams, DefaultCnnParameterLayout) {
  const ModelParams p = ModelParams::initialize(Architecture::default_cnn(), RngStream(1));
  EXPECT_EQ(p.at("conv1.weight").shape(), (Shape{8, 3, 3, 3}));
  EXPECT_EQ(p.at("conv2.weight").shape(), (Shape{16, 8, 3, 3}));
  EXPECT_EQ(p.at("dense1.weight").shape(), (Shape{4, 16 * 8 * 8}));
  EXPECT_EQ(p.parameter_count(), 8u * 27 + 8 + 16 * 72 + 16 + 4 * 1024 + 4);
  for (double b : p.at("conv1.bias").values()) EXPECT_EQ(b, 0.0);
  const double bound = std::sqrt(6.0 / 27);
  for (double w : p.at("conv1.weight").values()) EXPECT_LE(std::abs(w), bound);
  EXPECT_THROW(p.at("conv9.weight"), InvalidArgument);
}

TEST(ModelParams, ConstructorRejectsWrongShapes) {
  const Architecture arch = Architecture::parse("input=1x2x2;dense=2");
  EXPECT_THROW(ModelParams(arch, {{"dense1.weight", Tensor({2, 3})}, {"dense1.bias", Tensor({2})}}),
               InvalidArgument);
  EXPECT_THROW(ModelParams(arch, {{"dense1.weight", Tensor({2, 4})}}), InvalidArgument);
}

TEST(Forward, ZeroParamsGiveZeroLogits) {
  const ModelParams p = ModelParams::zeros(Architecture::default_cnn());
  const Image img = oracle::random_image(32, 32, 3, RngStream(3));
  const Tensor logits = model_logits(p, to_batch(std::span(&img, 1)));
  for (double v : logits.values()) EXPECT_EQ(v, 0.0);
}

TEST(Forward, IdentityOneByOneConv) {
  const Architecture arch = Architecture::parse("input=1x5x4;conv1x1=1");
  ModelParams p = ModelParams::zeros(arch);
  p.at("conv1.weight")[0] = 1.0;
  const Image img = oracle::random_image(5, 4, 1, RngStream(4));
  const ForwardResult r = model_forward(p, to_batch(std::span(&img, 1)));
  ASSERT_EQ(r.logits.size(), 20u);
  for (std::size_t y = 0; y < 5; ++y)
    for (std::size_t x = 0; x < 4; ++x) EXPECT_EQ(r.logits[y * 4 + x], img.at(y, x, 0));
}

TEST(Forward, MatchesScalarLoopOracle) {
  const ModelParams p = ModelParams::initialize(Architecture::default_cnn(), RngStream(5));
  std::vector<Image> imgs = {oracle::random_image(32, 32, 3, RngStream(6)),
                             oracle::random_image(32, 32, 3, RngStream(7))};
  const Tensor logits = model_logits(p, to_batch(imgs));
  for (std::size_t n = 0; n < 2; ++n) {
    const std::vector<double> ref = oracle::logits(p, imgs[n]);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(logits[n * 4 + k], ref[k], 1e-10);
  }
}

TEST(Forward, OddSizesAndWideKernel) {
  const Architecture arch = Architecture::parse("input=2x7x9;conv5x5=3;relu;maxpool2;dense=5;relu;dense=3");
  const ModelParams p = ModelParams::initialize(arch, RngStream(8));
  const Image img = oracle::random_image(7, 9, 2, RngStream(9));
  const Tensor logits = model_logits(p, to_batch(std::span(&img, 1)));
  const std::vector<double> ref = oracle::logits(p, img);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(logits[k], ref[k], 1e-10);
}

TEST(Forward, RejectsShapeMismatch) {
  const ModelParams p = ModelParams::zeros(Architecture::default_cnn());
  EXPECT_THROW(model_logits(p, Tensor({1, 3, 16, 16})), InvalidArgument);
}

TEST(Loss, UniformLogitsOneHot) {
  const Tensor logits({1, 4}, 0.0);
  const Tensor target({1, 4}, std::vector<double>{0, 0, 1, 0});
  EXPECT_NEAR(loss_softmax_ce(logits, target), std::log(4.0), 1e-15);
}

TEST(Loss, ConfidentCorrectTendsToZero) {
  const Tensor logits({1, 3}, std::vector<double>{0, 60, 0});
  const Tensor target({1, 3}, std::vector<double>{0, 1, 0});
  EXPECT_LT(loss_softmax_ce(logits, target), 1e-20);
}

TEST(Loss, MixedTargetHandValue) {
  const Tensor logits({1, 2}, 0.0);
  const Tensor target({1, 2}, std::vector<double>{0.6, 0.4});
  EXPECT_NEAR(loss_softmax_ce(logits, target), std::log(2.0), 1e-15);
}

TEST(Loss, RejectsUnnormalizedTargets) {
  const Tensor logits({1, 2}, 0.0);
  EXPECT_THROW(loss_softmax_ce(logits, Tensor({1, 2}, std::vector<double>{0.6, 0.5})), InvalidArgument);
  EXPECT_THROW(loss_softmax_ce(logits, Tensor({1, 2}, std::vector<double>{1.5, -0.5})), InvalidArgument);
}

TEST(Softmax, SumsToOneAndIsStable) {
  const Tensor p = softmax(Tensor({1, 3}, std::vector<double>{1000, 1001, 999}));
  EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-15);
  EXPECT_TRUE(p.all_finite());
}
