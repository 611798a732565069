// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>

#include "qrsnap/error.hpp"
#include "qrsnap/parallel.hpp"
#include "qrsnap/trainer.hpp"
#include "qrsnap/weights_io.hpp"

using namespace qrsnap;

namespace {

Dataset small_set(std::size_t per_class = 16) {
  SynthConfig c;
  c.per_class = per_class;
  return generate_synthetic(c);
}

TrainConfig config_for(std::vector<std::optional<LevelFamily>> families, int epochs, double alpha0 = 0.05) {
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.plan = make_cycle_plan(families, epochs, alpha0);
  return cfg;
}

bool contains_raw_sample(const Dataset& d, const Sample& s) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.images[i] == s.x && one_hot(d.labels[i], d.classes()) == s.y) return true;
  }
  return false;
}

}  // namespace

TEST(Trainer, BatchArithmetic) {
  EXPECT_EQ(batches_per_epoch(100, 32), 4u);
  EXPECT_EQ(batches_per_epoch(96, 32), 3u);
  const SchedulePlan s = schedule_for(make_cycle_plan({std::nullopt, std::nullopt}, 3), 100, 32);
  EXPECT_EQ(s.total_iterations, 24);
  EXPECT_EQ(s.cycles, 2);
}

TEST(Trainer, ZeroLearningRateLeavesParamsUnchanged) {
  const Dataset d = small_set(4);
  const TrainConfig cfg = config_for({LevelFamily::default_noise()}, 1, 0.0);
  ModelParams params = ModelParams::initialize(cfg.architecture, RngStream(1));
  const ModelParams before = params;
  OptimizerState opt;
  const CycleContext ctx{1, schedule_for(cfg.plan, d.size(), cfg.batch_size), 1};
  const Snapshot s = run_cycle(params, opt, cfg.plan.cycles[0], ctx, d, cfg, RngStream(2));
  EXPECT_EQ(s.params, before);
  EXPECT_EQ(params, before);
}

TEST(Trainer, PristineBatchesAreRawSamples) {
  const Dataset d = small_set(4);
  TrainHooks hooks;
  std::size_t seen = 0;
  hooks.on_batch = [&](std::int64_t, const std::vector<Sample>& batch) {
    for (const Sample& s : batch) EXPECT_TRUE(contains_raw_sample(d, s));
    seen += batch.size();
  };
  train_gspecialist(d, config_for({std::nullopt}, 2), hooks);
  EXPECT_EQ(seen, 2 * d.size());
}

TEST(Trainer, NoiseCycleAugmentsBatches) {
  const Dataset d = small_set(4);
  TrainHooks hooks;
  std::size_t raw = 0;
  hooks.on_batch = [&](std::int64_t, const std::vector<Sample>& batch) {
    for (const Sample& s : batch) raw += contains_raw_sample(d, s);
  };
  train_gspecialist(d, config_for({LevelFamily::default_noise()}, 1), hooks);
  EXPECT_EQ(raw, 0u);
}

TEST(Trainer, LossDecreasesOverFourEpochCycle) {
  const Dataset d = split(generate_synthetic(SynthConfig{}), 0.25, 7).first;
  TrainConfig cfg = config_for({std::nullopt}, 4);
  cfg.batch_size = 32;
  double first = -1;
  TrainHooks hooks;
  hooks.on_step = [&](const TrainLogRow& r) {
    if (first < 0) first = r.loss;
  };
  const EnsembleModel m = train_gspecialist(d, cfg, hooks);
  EXPECT_LT(m.snapshots()[0].final_train_loss, first);
}

TEST(Trainer, ThreeEpochPristineRunLearnsTheTask) {
  const Dataset d = generate_synthetic(SynthConfig{});
  TrainConfig cfg = config_for({std::nullopt}, 3);
  cfg.batch_size = 32;
  const EnsembleModel m = train_gspecialist(d, cfg);
  EXPECT_GE(evaluate_clean_fit(m.snapshots()[0].params, d).accuracy, 0.70);
}

TEST(Trainer, SpecialistPlanProducesOneSnapshotPerCycle) {
  const Dataset d = small_set();
  const EnsembleModel m =
      train_gspecialist(d, config_for({LevelFamily::default_noise(), LevelFamily::default_blur()}, 1));
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.snapshots()[0].specialty, Specialty::kGaussianNoise);
  EXPECT_EQ(m.snapshots()[1].specialty, Specialty::kGaussianBlur);
  EXPECT_EQ(m.snapshots()[0].cycle_index, 1);
  EXPECT_EQ(m.snapshots()[1].cycle_index, 2);
  EXPECT_NE(m.snapshots()[0].params, m.snapshots()[1].params);

  const EnsembleModel single = train_gspecialist(d, config_for({std::nullopt}, 1));
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single.snapshots()[0].specialty, Specialty::kPristine);
}

TEST(Trainer, BaselineMatchesIterationCountAndIsPristine) {
  const Dataset d = small_set();
  const TrainConfig cfg = config_for({LevelFamily::default_noise(), LevelFamily::default_blur()}, 2);
  std::vector<TrainLogRow> g_log, b_log;
  TrainHooks gh, bh;
  gh.on_step = [&](const TrainLogRow& r) { g_log.push_back(r); };
  bh.on_step = [&](const TrainLogRow& r) { b_log.push_back(r); };
  train_gspecialist(d, cfg, gh);
  const EnsembleModel b = train_baseline(d, cfg, bh);
  EXPECT_EQ(g_log.size(), b_log.size());
  for (const Snapshot& s : b.snapshots()) EXPECT_EQ(s.specialty, Specialty::kPristine);
  for (std::size_t i = 0; i < g_log.size(); ++i) {
    EXPECT_EQ(g_log[i].iteration, b_log[i].iteration);
    EXPECT_EQ(g_log[i].lr, b_log[i].lr);
  }
}

TEST(Trainer, LogFollowsTheSchedule) {
  const Dataset d = small_set();
  const TrainConfig cfg = config_for({LevelFamily::default_noise(), LevelFamily::default_blur()}, 2);
  const SchedulePlan plan = schedule_for(cfg.plan, d.size(), cfg.batch_size);
  std::int64_t expected_t = 1;
  TrainHooks hooks;
  hooks.on_step = [&](const TrainLogRow& r) {
    EXPECT_EQ(r.iteration, expected_t++);
    EXPECT_EQ(r.lr, lr_at(r.iteration, plan));
    EXPECT_EQ(r.cycle, static_cast<int>((r.iteration - 1) / plan.cycle_length()) + 1);
  };
  train_gspecialist(d, cfg, hooks);
  EXPECT_EQ(expected_t - 1, plan.total_iterations);
}

TEST(Trainer, DeterministicAcrossRunsAndThreadCounts) {
  const Dataset d = small_set();
  const TrainConfig cfg = config_for({LevelFamily::default_noise(), LevelFamily::default_blur()}, 1);
  set_thread_count(1);
  const EnsembleModel a = train_gspecialist(d, cfg);
  const EnsembleModel b = train_gspecialist(d, cfg);
  set_thread_count(3);
  const EnsembleModel c = train_gspecialist(d, cfg);
  set_thread_count(0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(encode_weights(a.snapshots()[i].params), encode_weights(b.snapshots()[i].params));
    EXPECT_EQ(encode_weights(a.snapshots()[i].params), encode_weights(c.snapshots()[i].params));
  }
  TrainConfig other = cfg;
  other.seed = 8;
  EXPECT_NE(train_gspecialist(d, other).snapshots()[0].params, a.snapshots()[0].params);
}

TEST(Trainer, ConfigValidation) {
  TrainConfig cfg = config_for({std::nullopt}, 1);
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = config_for({std::nullopt, std::nullopt}, 1);
  cfg.plan.cycles[1].epochs = 2;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = config_for({std::nullopt}, 1);
  cfg.momentum = 1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = config_for({std::nullopt}, 1);
  cfg.architecture = Architecture::default_cnn(3, 32, 32, 5);
  EXPECT_THROW(train_gspecialist(small_set(2), cfg), InvalidArgument);
}
