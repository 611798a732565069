// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include "qrsnap/ensemble.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "qrsnap/error.hpp"
#include "qrsnap/parallel.hpp"
#include "qrsnap/weights_io.hpp"

namespace qrsnap {
namespace fs = std::filesystem;

EnsembleModel::EnsembleModel(std::vector<Snapshot> snapshots) : snapshots_(std::move(snapshots)) {
  if (snapshots_.empty()) throw InvalidArgument("ensemble: needs at least one snapshot");
  for (const Snapshot& s : snapshots_) {
    if (!(s.params.architecture() == snapshots_.front().params.architecture())) {
      throw InvalidArgument("ensemble: snapshots disagree on architecture");
    }
    if (s.cycle_index < 1) throw InvalidArgument("ensemble: cycle_index must be >= 1");
  }
  order_.resize(snapshots_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    return snapshots_[a].cycle_index < snapshots_[b].cycle_index;
  });
}

const Architecture& EnsembleModel::architecture() const {
  if (snapshots_.empty()) throw InvalidArgument("ensemble: empty");
  return snapshots_.front().params.architecture();
}

Tensor to_batch(std::span<const Image* const> images) {
  if (images.empty()) throw InvalidArgument("to_batch: no images");
  const Image& first = *images.front();
  const std::size_t c = first.channels();
  const std::size_t h = first.height();
  const std::size_t w = first.width();
  Tensor batch({images.size(), c, h, w});
  auto out = batch.data();
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& img = *images[n];
    if (!img.same_shape(first)) throw InvalidArgument("to_batch: images differ in shape");
    double* dst = out.data() + n * c * h * w;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        for (std::size_t ch = 0; ch < c; ++ch) dst[(ch * h + y) * w + x] = img.at(y, x, ch);
      }
    }
  }
  return batch;
}

Tensor to_batch(std::span<const Image> images) {
  std::vector<const Image*> ptrs;
  ptrs.reserve(images.size());
  for (const Image& img : images) ptrs.push_back(&img);
  return to_batch(std::span<const Image* const>(ptrs));
}

std::vector<double> predict_single(const Snapshot& snapshot, const Image& image) {
  const Tensor probs = softmax(model_logits(snapshot.params, to_batch(std::span(&image, 1))));
  return probs.values();
}

std::vector<double> predict_ensemble(const EnsembleModel& model, const Image& image) {
  if (model.size() == 0) throw InvalidArgument("predict_ensemble: empty ensemble");
  const Tensor batch = to_batch(std::span(&image, 1));
  std::vector<double> sum;
  for (std::size_t idx : model.canonical_order()) {
    const Tensor probs = softmax(model_logits(model.snapshots()[idx].params, batch));
    if (sum.empty()) {
      sum = probs.values();
    } else {
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += probs[j];
    }
  }
  const auto m = static_cast<double>(model.size());
  if (model.size() > 1) {
    for (double& v : sum) v /= m;
  }
  return sum;
}

std::vector<std::vector<double>> predict_ensemble(const EnsembleModel& model,
                                                  std::span<const Image> images) {
  std::vector<std::vector<double>> out(images.size());
  parallel_for(images.size(), [&](std::size_t i) { out[i] = predict_ensemble(model, images[i]); });
  return out;
}

std::vector<std::size_t> top_k(std::span<const double> dist, std::size_t k) {
  if (k < 1 || k > dist.size()) {
    throw InvalidArgument("top_k: k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(dist.size()) + "]");
  }
  std::vector<std::size_t> idx(dist.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
  idx.resize(k);
  return idx;
}

fs::path save_ensemble(const EnsembleModel& model, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t i = 1; i < model.canonical_order().size(); ++i) {
    if (model.snapshots()[model.canonical_order()[i]].cycle_index ==
        model.snapshots()[model.canonical_order()[i - 1]].cycle_index) {
      throw InvalidArgument("save_ensemble: cycle indices must be unique to name snapshot files");
    }
  }
  std::ostringstream manifest;
  manifest << "# qrsnap ensemble manifest: <cycle_index> <specialty> <path>\n";
  manifest << "# architecture " << model.architecture().to_string() << "\n";
  for (std::size_t idx : model.canonical_order()) {
    const Snapshot& s = model.snapshots()[idx];
    const std::string file = "snapshot_" + std::to_string(s.cycle_index) + ".qrwt";
    save_weights(s.params, dir / file);
    manifest << s.cycle_index << " " << to_string(s.specialty) << " " << file << "\n";
  }
  const fs::path path = dir / "manifest.txt";
  const std::string text = manifest.str();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
  return path;
}

EnsembleModel load_ensemble(const fs::path& manifest) {
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + manifest.string());
  std::vector<Snapshot> snapshots;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    int cycle = 0;
    std::string specialty;
    if (!(fields >> cycle)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw FormatError(manifest.string() + ":" + std::to_string(line_no) + ": expected <cycle_index> <specialty> <path>");
    }
    std::string rest;
    if (!(fields >> specialty) || !std::getline(fields >> std::ws, rest) || rest.empty()) {
      throw FormatError(manifest.string() + ":" + std::to_string(line_no) + ": expected <cycle_index> <specialty> <path>");
    }
    while (!rest.empty() && (rest.back() == '\r' || rest.back() == ' ' || rest.back() == '\t')) rest.pop_back();
    fs::path file = rest;
    if (file.is_relative()) file = manifest.parent_path() / file;
    Snapshot s;
    try {
      s.specialty = parse_specialty(specialty);
    } catch (const InvalidArgument& e) {
      throw FormatError(manifest.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    s.cycle_index = cycle;
    s.params = load_weights(file);
    snapshots.push_back(std::move(s));
  }
  if (snapshots.empty()) throw FormatError(manifest.string() + ": manifest lists no snapshots");
  try {
    return EnsembleModel(std::move(snapshots));
  } catch (const InvalidArgument& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
}

}  // namespace qrsnap
