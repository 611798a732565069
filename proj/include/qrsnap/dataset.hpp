// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "qrsnap/image.hpp"

namespace qrsnap {

struct Dataset {
  std::vector<Image> images;
  std::vector<std::size_t> labels;
  std::vector<std::string> class_names;

  std::size_t size() const { return images.size(); }
  std::size_t classes() const { return class_names.size(); }
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

enum class SynthShape { kDisk, kSquare, kCross, kStripes };

struct SynthConfig {
  std::vector<SynthShape> classes = {SynthShape::kDisk, SynthShape::kSquare,
                                     SynthShape::kCross, SynthShape::kStripes};
  std::size_t per_class = 500;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t channels = 3;
  double position_jitter = 0.15;  // fraction of the image side
  double scale_jitter = 0.25;     // relative
  double rotation_jitter = 3.14159265358979323846;  // radians, +/-
  double background_noise = 0.03;  // sigma on [0, 1]
  std::uint64_t seed = 7;

  void validate() const;
};

std::string_view to_string(SynthShape shape);
SynthShape parse_synth_shape(std::string_view text);

/// Deterministic shape/texture classification set. Samples are ordered
/// class-interleaved (0, 1, ..., K-1, 0, 1, ...); sample i draws its jitter
/// from its own child stream.
Dataset generate_synthetic(const SynthConfig& config);

/// QRDS layout (little-endian): "QRDS" | u16 version=1 | u32 N | u16 H |
/// u16 W | u8 C | u16 K | K x (u32 len + UTF-8 name) | N x (u16 label,
/// H*W*C bytes). Pixels are stored as round(p * 255).
inline constexpr std::uint16_t kQrdsVersion = 1;

std::vector<std::uint8_t> encode_qrds(const Dataset& dataset);
Dataset decode_qrds(const std::vector<std::uint8_t>& bytes);
void save_qrds(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_qrds(const std::filesystem::path& path);

/// Reads root/<class>/<file>.ppm (binary P6). Classes are numbered by the
/// lexicographic order of their directory names.
Dataset load_ppm_dir(const std::filesystem::path& root);

/// Writes one image as binary P6 with maxval 255.
void save_ppm(const Image& image, const std::filesystem::path& path);

/// Stratified split; per class round(n * test_fraction) samples (at least
/// one on each side) go to the test part. Both parts keep dataset order.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction,
                                  std::uint64_t seed);

/// 64-bit FNV-1a over a byte buffer, printed as 16 hex digits.
std::string digest_hex(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                const std::vector<std::uint8_t>& bytes);

}  // namespace qrsnap
