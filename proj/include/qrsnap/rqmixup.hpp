// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrsnap/distortion.hpp"
#include "qrsnap/image.hpp"
#include "qrsnap/rng.hpp"

namespace qrsnap {

/// Image with a label distribution (one-hot or mixed).
struct Sample {
  Image x;
  std::vector<double> y;

  friend bool operator==(const Sample&, const Sample&) = default;
};

std::vector<double> one_hot(std::size_t label, std::size_t classes);

struct LambdaLaw {
  enum class Kind { kFixed, kUniform01, kBeta };
  Kind kind = Kind::kUniform01;
  double value = 0.0;  // lambda for kFixed, a for kBeta

  static LambdaLaw fixed(double lambda) { return {Kind::kFixed, lambda}; }
  static LambdaLaw uniform01() { return {Kind::kUniform01, 0.0}; }
  static LambdaLaw beta(double a) { return {Kind::kBeta, a}; }

  double draw(RngStream& stream) const;
  friend bool operator==(const LambdaLaw&, const LambdaLaw&) = default;
};

enum class Pairing { kSameSample, kShuffledWithinBatch };
enum class DrawScope { kPerBatch, kPerSample };

struct MixPolicy {
  LambdaLaw lambda_law = LambdaLaw::uniform01();
  Pairing pairing = Pairing::kSameSample;
  DrawScope draw_scope = DrawScope::kPerBatch;

  void validate() const;
  friend bool operator==(const MixPolicy&, const MixPolicy&) = default;
};

/// Text forms used in run configs: `uniform`, `fixed:0.3`, `beta:0.4`;
/// `same` / `shuffled`; `batch` / `sample`.
LambdaLaw parse_lambda_law(std::string_view text);
std::string to_string(const LambdaLaw& law);
Pairing parse_pairing(std::string_view text);
std::string_view to_string(Pairing pairing);
DrawScope parse_draw_scope(std::string_view text);
std::string_view to_string(DrawScope scope);

/// x_f = lambda * x_i + (1 - lambda) * x_n, y_f likewise.
Sample mix_pair(const Sample& clean, const Sample& noisy, double lambda);

/// Builds one RQMixup batch.
///
/// Draw order on `stream`: the batch distortion level, then the pairing
/// permutation (shuffled pairing only), then lambda (one draw per batch, or
/// one per sample in batch order). Sample i's distorted copy uses the child
/// stream split(kNoise, i), so it does not depend on pairing or lambda.
std::vector<Sample> mix_batch(std::span<const Sample> batch,
                              const LevelFamily& family,
                              const MixPolicy& policy, RngStream stream);

}  // namespace qrsnap
