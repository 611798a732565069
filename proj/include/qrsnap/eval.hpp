// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qrsnap/dataset.hpp"
#include "qrsnap/distortion.hpp"
#include "qrsnap/ensemble.hpp"

namespace qrsnap {

/// nullopt means the clean (undistorted) test set.
using GridPoint = std::optional<DistortionSpec>;

struct SweepGrid {
  std::vector<double> noise_levels = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  std::vector<int> blur_levels = {1, 3, 5, 7, 9, 11, 13, 15};
  bool include_clean = true;

  void validate() const;
  /// Clean first (if flagged), then noise levels, then blur levels.
  std::vector<GridPoint> points() const;
};

struct Accuracy {
  double top1 = 0.0;
  double topk = 0.0;
};

/// Stream used to distort test image `index` at `point`; a function of the
/// seed, the grid point and the index only.
RngStream evaluation_stream(std::uint64_t seed, const GridPoint& point,
                            std::size_t index);

/// Test set distorted once per image at `point`.
std::vector<Image> distort_test_set(const Dataset& test, const GridPoint& point,
                                    std::uint64_t seed);

Accuracy evaluate(const EnsembleModel& model, const Dataset& test,
                  const GridPoint& point, std::size_t k, std::uint64_t seed);

struct SweepRow {
  std::string model;
  std::string family;  // "clean", "noise" or "blur"
  long level = 0;
  double top1 = 0.0;
  double topk = 0.0;
  std::size_t n = 0;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::uint64_t seed = 0;
  std::string config_digest;
};

using TaggedModel = std::pair<std::string, EnsembleModel>;

/// Every model sees the same distorted images at each grid point.
SweepReport sweep(const std::vector<TaggedModel>& models, const Dataset& test,
                  const SweepGrid& grid, std::size_t k, std::uint64_t seed);

inline constexpr const char* kSweepCsvHeader = "model,family,level,top1,topk,n";

void write_sweep_csv(const SweepReport& report, std::ostream& out);
std::string sweep_csv(const SweepReport& report);
/// Parses a sweep CSV; malformed rows raise FormatError naming the line.
std::vector<SweepRow> read_sweep_csv(std::istream& in);

}  // namespace qrsnap
