// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "qrsnap/error.hpp"
#include "qrsnap/eval.hpp"
#include "qrsnap/parallel.hpp"

using namespace qrsnap;

namespace {

Dataset test_set(std::size_t per_class = 10) {
  SynthConfig c;
  c.per_class = per_class;
  c.height = c.width = 16;
  return generate_synthetic(c);
}

Architecture arch16() { return Architecture::default_cnn(3, 16, 16, 4); }

EnsembleModel random_model(std::uint64_t seed, int members = 1) {
  std::vector<Snapshot> s;
  for (int m = 0; m < members; ++m) {
    s.push_back({ModelParams::initialize(arch16(), RngStream(seed + m)), Specialty::kPristine, m + 1, 0.0});
  }
  return EnsembleModel(std::move(s));
}

}  // namespace

TEST(Grid, DefaultPointsAndCardinality) {
  const SweepGrid g;
  const auto pts = g.points();
  ASSERT_EQ(pts.size(), 19u);
  EXPECT_FALSE(pts[0].has_value());
  EXPECT_EQ(*pts[1], DistortionSpec::gaussian_noise(10));
  EXPECT_EQ(*pts[18], DistortionSpec::gaussian_blur(15));
  SweepGrid bad;
  bad.blur_levels = {2};
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = SweepGrid{};
  bad.noise_levels = {12.5};
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

// A perfect predictor is built by relabeling the test set with the model's own argmax.
TEST(Evaluate, PerfectPredictorScoresOne) {
  Dataset d = test_set();
  const EnsembleModel m = random_model(1);
  const SweepGrid g;
  for (const GridPoint& p : g.points()) {
    Dataset relabeled = d;
    const auto imgs = distort_test_set(d, p, 5);
    const auto preds = predict_ensemble(m, imgs);
    for (std::size_t i = 0; i < d.size(); ++i) relabeled.labels[i] = top_k(preds[i], 1)[0];
    const Accuracy a = evaluate(m, relabeled, p, 2, 5);
    EXPECT_EQ(a.top1, 1.0);
    EXPECT_EQ(a.topk, 1.0);
  }
}

TEST(Evaluate, RandomModelNearChance) {
  // Labels drawn independently of the images: top-1 ~ Binomial(n, 1/4) / n.
  Dataset d = test_set(100);
  RngStream r(9);
  for (auto& l : d.labels) l = r.below(4);
  const Accuracy a = evaluate(random_model(2), d, std::nullopt, 2, 1);
  const double n = static_cast<double>(d.size());
  EXPECT_NEAR(a.top1, 0.25, 3 * std::sqrt(0.25 * 0.75 / n));
  EXPECT_NEAR(a.topk, 0.5, 3 * std::sqrt(0.25 / n));
  EXPECT_LE(a.top1, a.topk);
}

TEST(Evaluate, Errors) {
  Dataset empty = test_set();
  empty.images.clear();
  empty.labels.clear();
  EXPECT_THROW(evaluate(random_model(1), empty, std::nullopt, 1, 1), InvalidArgument);
  EXPECT_THROW(evaluate(random_model(1), test_set(), std::nullopt, 5, 1), InvalidArgument);
}

TEST(DistortTestSet, PairedAndThreadIndependent) {
  const Dataset d = test_set();
  const GridPoint p = DistortionSpec::gaussian_noise(40);
  set_thread_count(1);
  const auto a = distort_test_set(d, p, 3);
  set_thread_count(4);
  const auto b = distort_test_set(d, p, 3);
  set_thread_count(0);
  EXPECT_EQ(a, b);
  EXPECT_NE(distort_test_set(d, p, 4), a);
  EXPECT_EQ(distort_test_set(d, std::nullopt, 3), d.images);
  EXPECT_EQ(distort_test_set(d, DistortionSpec::gaussian_blur(1), 3), d.images);
}

TEST(Sweep, CardinalityOrderAndIdentityRows) {
  const Dataset d = test_set();
  const std::vector<TaggedModel> models = {{"a", random_model(1, 2)}, {"b", random_model(5)}};
  const SweepReport r = sweep(models, d, SweepGrid{}, 3, 11);
  ASSERT_EQ(r.rows.size(), 38u);
  EXPECT_EQ(r.rows[0].model, "a");
  EXPECT_EQ(r.rows[0].family, "clean");
  EXPECT_EQ(r.rows[19].model, "b");
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const SweepRow& row = r.rows[i];
    EXPECT_EQ(row.n, d.size());
    EXPECT_LE(row.top1, row.topk);
    if (row.family == "blur" && row.level == 1) {
      const SweepRow& clean = r.rows[i - 11];
      EXPECT_EQ(clean.family, "clean");
      EXPECT_EQ(row.top1, clean.top1);
      EXPECT_EQ(row.topk, clean.topk);
    }
  }
  EXPECT_EQ(sweep_csv(sweep(models, d, SweepGrid{}, 3, 11)), sweep_csv(r));
}

TEST(Sweep, Errors) {
  EXPECT_THROW(sweep({}, test_set(), SweepGrid{}, 1, 1), InvalidArgument);
  EXPECT_THROW(sweep({{"a,b", random_model(1)}}, test_set(), SweepGrid{}, 1, 1), InvalidArgument);
}

TEST(SweepCsv, ExactFormat) {
  SweepReport r;
  r.rows = {{"gs", "clean", 0, 0.5, 0.75, 8}, {"gs", "noise", 60, 1.0 / 3, 2.0 / 3, 8}};
  EXPECT_EQ(sweep_csv(r),
            "model,family,level,top1,topk,n\n"
            "gs,clean,0,0.500000,0.750000,8\n"
            "gs,noise,60,0.333333,0.666667,8\n");
  std::istringstream in(sweep_csv(r));
  const auto rows = read_sweep_csv(in);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].level, 60);
  EXPECT_NEAR(rows[1].top1, 0.333333, 1e-12);
}

TEST(SweepCsv, MalformedInputNamesTheLine) {
  auto error_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_sweep_csv(in);
    } catch (const FormatError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string header = "model,family,level,top1,topk,n\n";
  EXPECT_NE(error_of("").find("line 1"), std::string::npos);
  EXPECT_NE(error_of("model,family\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_of(header).find("line 2"), std::string::npos);
  EXPECT_NE(error_of(header + "a,clean,0,0.5,0.5,4\na,noise,x,0.5,0.5,4\n").find("line 3"), std::string::npos);
  EXPECT_NE(error_of(header + "a,jpeg,0,0.5,0.5,4\n").find("line 2"), std::string::npos);
  EXPECT_NE(error_of(header + "a,clean,0,1.5,0.5,4\n").find("line 2"), std::string::npos);
  EXPECT_NE(error_of(header + "a,clean,0,0.5,0.5\n").find("line 2"), std::string::npos);
}
