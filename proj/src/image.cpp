// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include "qrsnap/image.hpp"

#include <algorithm>
#include <string>

#include "qrsnap/error.hpp"

namespace qrsnap {

Image::Image(std::size_t height, std::size_t width, std::size_t channels, double fill)
    : height_(height), width_(width), channels_(channels),
      pixels_(height * width * channels, fill) {
  if (height == 0 || width == 0 || channels == 0) {
    throw InvalidArgument("image dimensions must be positive");
  }
}

Image::Image(std::size_t height, std::size_t width, std::size_t channels,
             std::vector<double> pixels)
    : height_(height), width_(width), channels_(channels), pixels_(std::move(pixels)) {
  if (height == 0 || width == 0 || channels == 0) {
    throw InvalidArgument("image dimensions must be positive");
  }
  if (pixels_.size() != height * width * channels) {
    throw InvalidArgument("image: " + std::to_string(pixels_.size()) +
                          " pixels do not match " + std::to_string(height) + "x" +
                          std::to_string(width) + "x" + std::to_string(channels));
  }
}

bool Image::in_unit_range() const {
  return std::all_of(pixels_.begin(), pixels_.end(),
                     [](double p) { return p >= 0.0 && p <= 1.0; });
}

}  // namespace qrsnap
