// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include "qrsnap/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "qrsnap/error.hpp"

namespace qrsnap {
namespace {

void check_data(const Dataset& data, const Architecture& arch) {
  if (data.size() == 0) throw InvalidArgument("training set is empty");
  const Image& first = data.images.front();
  const FeatureShape& in = arch.input();
  if (first.channels() != in.channels || first.height() != in.height || first.width() != in.width) {
    throw InvalidArgument("training images are " + std::to_string(first.height()) + "x" +
                          std::to_string(first.width()) + "x" + std::to_string(first.channels()) +
                          " but the architecture expects " + arch.to_string());
  }
  if (data.classes() != arch.output_size()) {
    throw InvalidArgument("dataset has " + std::to_string(data.classes()) +
                          " classes but the network emits " + std::to_string(arch.output_size()));
  }
}

Tensor targets_of(const std::vector<Sample>& samples) {
  const std::size_t k = samples.front().y.size();
  Tensor t({samples.size(), k});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::copy(samples[i].y.begin(), samples[i].y.end(), t.data().begin() + i * k);
  }
  return t;
}

Tensor inputs_of(const std::vector<Sample>& samples) {
  std::vector<const Image*> images;
  images.reserve(samples.size());
  for (const Sample& s : samples) images.push_back(&s.x);
  return to_batch(std::span<const Image* const>(images));
}

EnsembleModel train_run(const Dataset& train_set, const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  check_data(train_set, config.architecture);
  const SchedulePlan schedule = schedule_for(config.plan, train_set.size(), config.batch_size);
  const RngStream root(config.seed);
  ModelParams params = ModelParams::initialize(config.architecture, root.split(Purpose::kInit, 0));
  OptimizerState optimizer;
  std::vector<Snapshot> snapshots;
  for (std::size_t m = 0; m < config.plan.cycles.size(); ++m) {
    CycleContext context;
    context.cycle_index = static_cast<int>(m) + 1;
    context.schedule = schedule;
    context.first_iteration = static_cast<std::int64_t>(m) * schedule.cycle_length() + 1;
    snapshots.push_back(run_cycle(params, optimizer, config.plan.cycles[m], context, train_set,
                                  config, root, hooks));
  }
  return EnsembleModel(std::move(snapshots));
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
  mix_policy.validate();
  plan.validate();
  for (const Cycle& c : plan.cycles) {
    if (c.epochs != plan.cycles.front().epochs) {
      throw InvalidArgument("cycle plan: every cycle needs the same epoch count so that T is divisible by M");
    }
  }
}

std::size_t batches_per_epoch(std::size_t samples, std::size_t batch_size) {
  if (batch_size == 0) throw InvalidArgument("batch_size must be >= 1");
  return (samples + batch_size - 1) / batch_size;
}

SchedulePlan schedule_for(const CyclePlan& plan, std::size_t samples, std::size_t batch_size) {
  plan.validate();
  if (samples == 0) throw InvalidArgument("training set is empty");
  SchedulePlan s;
  s.cycles = static_cast<std::int64_t>(plan.cycles.size());
  s.total_iterations = s.cycles * plan.cycles.front().epochs *
                       static_cast<std::int64_t>(batches_per_epoch(samples, batch_size));
  s.alpha0 = plan.cycles.front().alpha0 > 0.0 ? plan.cycles.front().alpha0 : 1.0;
  return s;
}

Snapshot run_cycle(ModelParams& params, OptimizerState& optimizer, const Cycle& cycle,
                   const CycleContext& context, const Dataset& train_set, const TrainConfig& config,
                   const RngStream& stream, const TrainHooks& hooks) {
  if (train_set.size() == 0) throw InvalidArgument("run_cycle: empty training set");
  if (cycle.epochs < 1) throw InvalidArgument("run_cycle: epochs must be >= 1");
  check_data(train_set, params.architecture());
  const std::size_t n = train_set.size();
  const std::size_t k = train_set.classes();
  const std::size_t per_epoch = batches_per_epoch(n, config.batch_size);
  const SchedulePlan schedule{cycle.alpha0 > 0.0 ? cycle.alpha0 : 1.0, context.schedule.total_iterations,
                              context.schedule.cycles};

  std::int64_t t = context.first_iteration;
  const auto first_epoch = static_cast<std::uint64_t>(t - 1) / per_epoch;
  double last_epoch_loss = 0.0;
  for (int e = 0; e < cycle.epochs; ++e) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngStream shuffle = stream.split(Purpose::kShuffle, first_epoch + static_cast<std::uint64_t>(e));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < per_epoch; ++b, ++t) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(n, begin + config.batch_size);
      std::vector<Sample> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t idx = order[i];
        batch.push_back({train_set.images[idx], one_hot(train_set.labels[idx], k)});
      }
      if (cycle.family) {
        batch = mix_batch(batch, *cycle.family, config.mix_policy,
                          stream.split(Purpose::kAugment, static_cast<std::uint64_t>(t)));
      }
      if (hooks.on_batch) hooks.on_batch(t, batch);

      auto fwd = model_forward(params, inputs_of(batch));
      const double loss = loss_softmax_ce(fwd.tape, targets_of(batch));
      const Gradients grads = backward(fwd.tape, params);
      const double lr = cycle.alpha0 > 0.0 ? lr_at(t, schedule) : 0.0;
      sgd_step(params, grads, lr, config.momentum, optimizer.velocity);
      epoch_loss += loss;
      if (hooks.on_step) hooks.on_step({t, context.cycle_index, lr, loss});
    }
    last_epoch_loss = epoch_loss / static_cast<double>(per_epoch);
  }
  return Snapshot{params, cycle.specialty(), context.cycle_index, last_epoch_loss};
}

EnsembleModel train_gspecialist(const Dataset& train_set, const TrainConfig& config,
                                const TrainHooks& hooks) {
  return train_run(train_set, config, hooks);
}

EnsembleModel train_baseline(const Dataset& train_set, const TrainConfig& config,
                             const TrainHooks& hooks) {
  TrainConfig pristine = config;
  for (Cycle& c : pristine.plan.cycles) c.family.reset();
  return train_run(train_set, pristine, hooks);
}

CleanFit evaluate_clean_fit(const ModelParams& params, const Dataset& data) {
  check_data(data, params.architecture());
  constexpr std::size_t kChunk = 256;
  const std::size_t k = data.classes();
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < data.size(); begin += kChunk) {
    const std::size_t end = std::min(data.size(), begin + kChunk);
    const Tensor logits =
        model_logits(params, to_batch(std::span(data.images).subspan(begin, end - begin)));
    Tensor targets({end - begin, k});
    for (std::size_t i = begin; i < end; ++i) {
      targets[(i - begin) * k + data.labels[i]] = 1.0;
      const double* row = logits.data().data() + (i - begin) * k;
      if (static_cast<std::size_t>(std::max_element(row, row + k) - row) == data.labels[i]) ++correct;
    }
    loss += loss_softmax_ce(logits, targets) * static_cast<double>(end - begin);
  }
  return {loss / static_cast<double>(data.size()),
          static_cast<double>(correct) / static_cast<double>(data.size())};
}

}  // namespace qrsnap
