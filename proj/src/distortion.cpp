// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include "qrsnap/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qrsnap/error.hpp"

namespace qrsnap {
namespace {

bool is_odd_kernel(double level) {
  return level >= 1.0 && level == std::floor(level) && std::fmod(level, 2.0) == 1.0;
}

/// Half-sample symmetric reflection of i into [0, n).
std::size_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
  const std::ptrdiff_t period = 2 * n;
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  if (m >= n) m = period - 1 - m;
  return static_cast<std::size_t>(m);
}

/// One 1-D pass along a line of `n` samples spaced `stride` apart.
void blur_line(const double* src, double* dst, std::size_t n, std::size_t stride,
               const std::vector<double>& taps) {
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto len = static_cast<std::ptrdiff_t>(n);
  for (std::ptrdiff_t i = 0; i < len; ++i) {
    const double center = src[static_cast<std::size_t>(i) * stride];
    double acc = 0.0;
    for (std::ptrdiff_t d = -radius; d <= radius; ++d) {
      if (d == 0) continue;
      acc += taps[static_cast<std::size_t>(d + radius)] *
             (src[reflect(i + d, len) * stride] - center);
    }
    dst[static_cast<std::size_t>(i) * stride] = std::clamp(center + acc, 0.0, 1.0);
  }
}

}  // namespace

std::string_view to_string(DistortionKind kind) {
  return kind == DistortionKind::kGaussianNoise ? "noise" : "blur";
}

DistortionKind parse_distortion_kind(std::string_view text) {
  if (text == "noise") return DistortionKind::kGaussianNoise;
  if (text == "blur") return DistortionKind::kGaussianBlur;
  throw InvalidArgument("unknown distortion family '" + std::string(text) + "'");
}

DistortionSpec DistortionSpec::gaussian_noise(double sigma255) {
  DistortionSpec spec{DistortionKind::kGaussianNoise, sigma255};
  validate(spec);
  return spec;
}

DistortionSpec DistortionSpec::gaussian_blur(int kernel) {
  DistortionSpec spec{DistortionKind::kGaussianBlur, static_cast<double>(kernel)};
  validate(spec);
  return spec;
}

void validate(const DistortionSpec& spec) {
  if (spec.kind == DistortionKind::kGaussianNoise) {
    if (!(spec.level >= 0.0) || !std::isfinite(spec.level)) {
      throw InvalidArgument("noise sigma must be finite and >= 0");
    }
  } else if (!is_odd_kernel(spec.level)) {
    throw InvalidArgument("blur kernel must be an odd integer >= 1, got " +
                          std::to_string(spec.level));
  }
}

LevelFamily LevelFamily::default_noise() {
  return {DistortionKind::kGaussianNoise, {10, 20, 30, 40, 50, 60, 70, 80, 90, 100}};
}

LevelFamily LevelFamily::default_blur() {
  return {DistortionKind::kGaussianBlur, {1, 3, 5, 7, 9, 11, 13, 15}};
}

void LevelFamily::validate() const {
  if (levels.empty()) throw InvalidArgument("level family is empty");
  for (double level : levels) qrsnap::validate(DistortionSpec{kind, level});
}

double blur_sigma(int kernel) {
  return 0.3 * ((kernel - 1) * 0.5 - 1.0) + 0.8;
}

std::vector<double> gaussian_kernel_1d(int kernel) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw InvalidArgument("gaussian kernel size must be odd and >= 1, got " +
                          std::to_string(kernel));
  }
  if (kernel == 1) return {1.0};
  const double sigma = blur_sigma(kernel);
  const int radius = kernel / 2;
  std::vector<double> taps(static_cast<std::size_t>(kernel));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : taps) v /= sum;
  return taps;
}

Image apply_blur(const Image& image, int kernel) {
  const std::vector<double> taps = gaussian_kernel_1d(kernel);
  if (kernel == 1) return image;
  const std::size_t h = image.height();
  const std::size_t w = image.width();
  const std::size_t c = image.channels();
  Image tmp(h, w, c);
  Image out(h, w, c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      const std::size_t base = y * w * c + ch;
      blur_line(image.pixels().data() + base, tmp.pixels().data() + base, w, c, taps);
    }
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t base = x * c + ch;
      blur_line(tmp.pixels().data() + base, out.pixels().data() + base, h, w * c, taps);
    }
  }
  return out;
}

Image apply_noise(const Image& image, double sigma255, RngStream& stream) {
  if (!(sigma255 >= 0.0) || !std::isfinite(sigma255)) {
    throw InvalidArgument("noise sigma must be finite and >= 0");
  }
  if (sigma255 == 0.0) return image;
  const double sigma = sigma255 / 255.0;
  Image out = image;
  for (double& p : out.pixels()) p = std::clamp(p + sigma * stream.normal(), 0.0, 1.0);
  return out;
}

DistortionSpec sample_level(const LevelFamily& family, RngStream& stream) {
  family.validate();
  return {family.kind, family.levels[stream.below(family.levels.size())]};
}

Image distort(const Image& image, const DistortionSpec& spec, RngStream& stream) {
  validate(spec);
  if (spec.kind == DistortionKind::kGaussianNoise) return apply_noise(image, spec.level, stream);
  return apply_blur(image, static_cast<int>(spec.level));
}

}  // namespace qrsnap
