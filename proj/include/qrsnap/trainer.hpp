// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qrsnap/dataset.hpp"
#include "qrsnap/ensemble.hpp"
#include "qrsnap/model.hpp"
#include "qrsnap/rqmixup.hpp"
#include "qrsnap/schedule.hpp"

namespace qrsnap {

struct TrainConfig {
  Architecture architecture = Architecture::default_cnn();
  std::size_t batch_size = 32;
  double momentum = 0.9;
  std::uint64_t seed = 7;
  MixPolicy mix_policy;
  CyclePlan plan;

  void validate() const;
};

struct TrainLogRow {
  std::int64_t iteration = 0;  // 1-based, global over the run
  int cycle = 0;
  double lr = 0.0;
  double loss = 0.0;
};

/// Optional observers called from the training loop.
struct TrainHooks {
  std::function<void(const TrainLogRow&)> on_step;
  /// The exact samples fed to the optimizer at an iteration.
  std::function<void(std::int64_t, const std::vector<Sample>&)> on_batch;
};

std::size_t batches_per_epoch(std::size_t samples, std::size_t batch_size);

/// Schedule shared by every cycle of `plan` on a training set of `samples`.
SchedulePlan schedule_for(const CyclePlan& plan, std::size_t samples,
                          std::size_t batch_size);

/// Where a cycle sits inside the run.
struct CycleContext {
  int cycle_index = 1;
  SchedulePlan schedule;
  std::int64_t first_iteration = 1;
};

/// Momentum buffers carried across cycles.
struct OptimizerState {
  ModelParams velocity;
};

/// Trains one cycle in place and returns a copy of the resulting weights.
///
/// Per epoch e (counted over the whole run) the sample order comes from
/// split(kShuffle, e); the batch at global iteration t is augmented with
/// split(kAugment, t). Pristine cycles feed batches through untouched.
Snapshot run_cycle(ModelParams& params, OptimizerState& optimizer,
                   const Cycle& cycle, const CycleContext& context,
                   const Dataset& train_set, const TrainConfig& config,
                   const RngStream& stream, const TrainHooks& hooks = {});

/// Single continuous run, one snapshot per cycle of `config.plan`.
EnsembleModel train_gspecialist(const Dataset& train_set,
                                const TrainConfig& config,
                                const TrainHooks& hooks = {});

/// Same plan and schedule, but every cycle trains on pristine data.
EnsembleModel train_baseline(const Dataset& train_set,
                             const TrainConfig& config,
                             const TrainHooks& hooks = {});

/// Mean cross-entropy and top-1 accuracy of `params` on clean data.
struct CleanFit {
  double loss = 0.0;
  double accuracy = 0.0;
};
CleanFit evaluate_clean_fit(const ModelParams& params, const Dataset& data);

}  // namespace qrsnap
