// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "qrsnap/image.hpp"
#include "qrsnap/rng.hpp"

namespace qrsnap {

enum class DistortionKind { kGaussianNoise, kGaussianBlur };

std::string_view to_string(DistortionKind kind);
DistortionKind parse_distortion_kind(std::string_view text);

/// One distortion at one severity. Noise levels are sigma on the 0-255
/// scale; blur levels are odd kernel sizes.
struct DistortionSpec {
  DistortionKind kind = DistortionKind::kGaussianNoise;
  double level = 0.0;

  static DistortionSpec gaussian_noise(double sigma255);
  static DistortionSpec gaussian_blur(int kernel);

  friend bool operator==(const DistortionSpec&, const DistortionSpec&) = default;
};

/// Admissible severities of one distortion family.
struct LevelFamily {
  DistortionKind kind = DistortionKind::kGaussianNoise;
  std::vector<double> levels;

  /// sigma in {10, 20, ..., 100}
  static LevelFamily default_noise();
  /// k in {1, 3, ..., 15}
  static LevelFamily default_blur();

  void validate() const;

  friend bool operator==(const LevelFamily&, const LevelFamily&) = default;
};

void validate(const DistortionSpec& spec);

/// Gaussian blur sigma used for kernel size k: 0.3 * ((k - 1) / 2 - 1) + 0.8.
double blur_sigma(int kernel);

/// Normalized symmetric Gaussian taps for odd k >= 1.
std::vector<double> gaussian_kernel_1d(int kernel);

/// Separable Gaussian blur, horizontal then vertical, per channel. Borders
/// reflect about the pixel edge (cba|abcd|dcb), which keeps flat fields and
/// the global mean exact.
Image apply_blur(const Image& image, int kernel);

/// clip(x + N(0, (sigma255 / 255)^2), 0, 1) per pixel and channel, drawn in
/// pixel order from `stream`.
Image apply_noise(const Image& image, double sigma255, RngStream& stream);

/// Uniform draw from the family's levels.
DistortionSpec sample_level(const LevelFamily& family, RngStream& stream);

Image distort(const Image& image, const DistortionSpec& spec,
              RngStream& stream);

}  // namespace qrsnap
