// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qrsnap/image.hpp"
#include "qrsnap/model.hpp"
#include "qrsnap/schedule.hpp"

namespace qrsnap {

struct Snapshot {
  ModelParams params;
  Specialty specialty = Specialty::kPristine;
  int cycle_index = 1;
  double final_train_loss = 0.0;
};

/// Snapshots of one training run sharing a single architecture.
class EnsembleModel {
 public:
  EnsembleModel() = default;
  explicit EnsembleModel(std::vector<Snapshot> snapshots);

  const std::vector<Snapshot>& snapshots() const { return snapshots_; }
  const Architecture& architecture() const;
  std::size_t size() const { return snapshots_.size(); }
  /// Member indices sorted by ascending cycle_index (stable).
  const std::vector<std::size_t>& canonical_order() const { return order_; }

 private:
  std::vector<Snapshot> snapshots_;
  std::vector<std::size_t> order_;
};

/// Converts HWC images to one [N, C, H, W] tensor.
Tensor to_batch(std::span<const Image> images);
Tensor to_batch(std::span<const Image* const> images);

std::vector<double> predict_single(const Snapshot& snapshot, const Image& image);

/// Mean of member softmax outputs, summed in ascending cycle_index order.
std::vector<double> predict_ensemble(const EnsembleModel& model,
                                     const Image& image);

/// predict_ensemble for many images (evaluated in parallel).
std::vector<std::vector<double>> predict_ensemble(
    const EnsembleModel& model, std::span<const Image> images);

/// Indices of the k largest entries, descending; ties go to the lower index.
std::vector<std::size_t> top_k(std::span<const double> dist, std::size_t k);

/// Writes one QRWT file per snapshot plus `manifest.txt` into `dir`.
/// Manifest lines are `<cycle_index> <specialty> <path>`, paths relative to
/// the manifest; `#` starts a comment.
std::filesystem::path save_ensemble(const EnsembleModel& model,
                                    const std::filesystem::path& dir);

EnsembleModel load_ensemble(const std::filesystem::path& manifest);

}  // namespace qrsnap
