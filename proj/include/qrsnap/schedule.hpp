// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qrsnap/distortion.hpp"

namespace qrsnap {

/// Cyclic cosine schedule over `total_iterations` optimizer steps split into
/// `cycles` equal cycles.
struct SchedulePlan {
  double alpha0 = 0.05;
  std::int64_t total_iterations = 1;
  std::int64_t cycles = 1;

  void validate() const;
  std::int64_t cycle_length() const { return total_iterations / cycles; }
};

/// alpha(t) = alpha0 / 2 * (cos(pi * mod(t - 1, T/M) / (T/M)) + 1), 1-based t.
double lr_at(std::int64_t t, const SchedulePlan& plan);

/// Iterations m * T / M for m = 1..M, after which a snapshot is taken.
std::vector<std::int64_t> snapshot_points(const SchedulePlan& plan);

enum class Specialty { kPristine, kGaussianNoise, kGaussianBlur };

std::string_view to_string(Specialty specialty);
Specialty parse_specialty(std::string_view text);

/// A cycle trains on one family; an empty family means pristine data.
struct Cycle {
  std::optional<LevelFamily> family;
  int epochs = 1;
  double alpha0 = 0.05;

  Specialty specialty() const;
};

struct CyclePlan {
  std::vector<Cycle> cycles;

  void validate() const;
};

inline constexpr int kDefaultEpochsPerCycle = 32;

/// One cycle per family, in order.
CyclePlan make_cycle_plan(const std::vector<std::optional<LevelFamily>>& families,
                          int epochs_per_cycle = kDefaultEpochsPerCycle,
                          double alpha0 = 0.05);

}  // namespace qrsnap
