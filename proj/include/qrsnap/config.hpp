// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "qrsnap/dataset.hpp"
#include "qrsnap/eval.hpp"
#include "qrsnap/trainer.hpp"

namespace qrsnap {

/// Flat `key = value` run configuration; `#` starts a comment.
///
/// Every key has a default, unknown keys are rejected, and all values are
/// validated when the config is built, before any command does work.
struct RunConfig {
  std::uint64_t seed = 7;

  SynthConfig synth;

  std::filesystem::path data;   // QRDS dataset used by train and sweep
  double test_fraction = 0.25;

  TrainConfig train;            // plan built from cycles/epochs/alpha0 keys
  std::vector<std::string> cycle_names = {"noise", "blur"};
  int epochs_per_cycle = kDefaultEpochsPerCycle;
  double alpha0 = 0.05;
  LevelFamily noise_family = LevelFamily::default_noise();
  LevelFamily blur_family = LevelFamily::default_blur();

  SweepGrid grid;
  std::size_t top_k = 3;

  /// Rebuilds `train.plan` for the given mode (pristine cycles for the
  /// baseline).
  CyclePlan plan(bool baseline) const;
};

/// Known keys in declaration order with their default values.
std::map<std::string, std::string> default_config_values();

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
/// `seed` override applied after parsing (also reseeds synth and training).
void apply_seed(RunConfig& config, std::uint64_t seed);

}  // namespace qrsnap
