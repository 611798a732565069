// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

namespace qrsnap {

/// Purposes used to derive independent child streams. Values are part of the
/// reproducibility contract: changing one changes every downstream draw.
enum class Purpose : std::uint64_t {
  kInit = 1,
  kShuffle = 2,
  kAugment = 3,
  kNoise = 4,
  kSynth = 5,
  kSplit = 6,
  kEval = 7,
  kGradCheck = 8,
};

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Splittable counter-based random stream.
///
/// A stream is a (key, stream id, counter) triple. `split` derives a child
/// from the key and stream id only, so children do not depend on how many
/// values were drawn from the parent. This is what lets per-batch and
/// per-image work run in any order and still reproduce bit for bit.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  RngStream split(std::uint64_t purpose, std::uint64_t index) const;
  RngStream split(Purpose purpose, std::uint64_t index) const {
    return split(static_cast<std::uint64_t>(purpose), index);
  }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller (one value per call).
  double normal();
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Gamma(shape, 1) via Marsaglia-Tsang.
  double gamma(double shape);
  /// Symmetric Beta(a, a).
  double beta(double a);

  std::uint64_t counter() const { return counter_; }

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  RngStream(std::array<std::uint32_t, 2> key, std::uint64_t stream_id);
  std::uint32_t next_u32();

  std::array<std::uint32_t, 2> key_{};
  std::uint64_t stream_id_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
};

}  // namespace qrsnap
