// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include "qrsnap/schedule.hpp"

#include <cmath>
#include <numbers>

#include "qrsnap/error.hpp"

namespace qrsnap {

void SchedulePlan::validate() const {
  if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) throw InvalidArgument("schedule: alpha0 must be > 0");
  if (cycles < 1) throw InvalidArgument("schedule: need at least one cycle");
  if (total_iterations < cycles) throw InvalidArgument("schedule: T must be >= M");
  if (total_iterations % cycles != 0) {
    throw InvalidArgument("schedule: T=" + std::to_string(total_iterations) +
                          " is not divisible by M=" + std::to_string(cycles));
  }
}

double lr_at(std::int64_t t, const SchedulePlan& plan) {
  plan.validate();
  if (t < 1 || t > plan.total_iterations) {
    throw InvalidArgument("lr_at: t=" + std::to_string(t) + " outside [1, " +
                          std::to_string(plan.total_iterations) + "]");
  }
  const std::int64_t period = plan.cycle_length();
  const std::int64_t offset = (t - 1) % period;
  if (offset == 0) return plan.alpha0;
  const double phase = std::numbers::pi * static_cast<double>(offset) / static_cast<double>(period);
  return plan.alpha0 / 2.0 * (std::cos(phase) + 1.0);
}

std::vector<std::int64_t> snapshot_points(const SchedulePlan& plan) {
  plan.validate();
  std::vector<std::int64_t> points;
  for (std::int64_t m = 1; m <= plan.cycles; ++m) points.push_back(m * plan.cycle_length());
  return points;
}

std::string_view to_string(Specialty specialty) {
  switch (specialty) {
    case Specialty::kPristine: return "pristine";
    case Specialty::kGaussianNoise: return "noise";
    case Specialty::kGaussianBlur: return "blur";
  }
  return "pristine";
}

Specialty parse_specialty(std::string_view text) {
  if (text == "pristine") return Specialty::kPristine;
  if (text == "noise") return Specialty::kGaussianNoise;
  if (text == "blur") return Specialty::kGaussianBlur;
  throw InvalidArgument("unknown specialty '" + std::string(text) + "'");
}

Specialty Cycle::specialty() const {
  if (!family) return Specialty::kPristine;
  return family->kind == DistortionKind::kGaussianNoise ? Specialty::kGaussianNoise
                                                        : Specialty::kGaussianBlur;
}

void CyclePlan::validate() const {
  if (cycles.empty()) throw InvalidArgument("cycle plan: no cycles");
  for (const Cycle& c : cycles) {
    if (c.epochs < 1) throw InvalidArgument("cycle plan: epochs must be >= 1");
    if (!(c.alpha0 >= 0.0) || !std::isfinite(c.alpha0)) {
      throw InvalidArgument("cycle plan: alpha0 must be finite and >= 0");
    }
    if (c.family) c.family->validate();
  }
}

CyclePlan make_cycle_plan(const std::vector<std::optional<LevelFamily>>& families,
                          int epochs_per_cycle, double alpha0) {
  if (families.empty()) throw InvalidArgument("make_cycle_plan: empty family list");
  CyclePlan plan;
  for (const auto& family : families) plan.cycles.push_back({family, epochs_per_cycle, alpha0});
  plan.validate();
  return plan;
}

}  // namespace qrsnap
