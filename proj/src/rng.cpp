// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include "qrsnap/rng.hpp"

#include <cmath>
#include <numbers>

#include "qrsnap/error.hpp"

namespace qrsnap {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

std::uint32_t lo(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
std::uint32_t hi(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    ctr = {hi(p1) ^ ctr[1] ^ key[0], lo(p1), hi(p0) ^ ctr[3] ^ key[1], lo(p0)};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed)
    : key_{lo(seed), hi(seed)}, stream_id_(0) {}

RngStream::RngStream(std::array<std::uint32_t, 2> key, std::uint64_t stream_id)
    : key_(key), stream_id_(stream_id) {}

RngStream RngStream::split(std::uint64_t purpose, std::uint64_t index) const {
  const auto first = philox4x32(
      {lo(stream_id_), hi(stream_id_), lo(purpose), hi(purpose)}, key_);
  const auto second =
      philox4x32({lo(index), hi(index), 0x51A7u, 0u}, {first[0], first[1]});
  return RngStream({second[0], second[1]},
                   std::uint64_t{second[2]} | (std::uint64_t{second[3]} << 32));
}

std::uint32_t RngStream::next_u32() {
  if (used_ == 4) {
    block_ = philox4x32(
        {lo(counter_), hi(counter_), lo(stream_id_), hi(stream_id_)}, key_);
    ++counter_;
    used_ = 0;
  }
  return block_[used_++];
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t a = next_u32();
  const std::uint64_t b = next_u32();
  return (a << 32) | b;
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("RngStream::below: n must be positive");
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

double RngStream::gamma(double shape) {
  if (!(shape > 0.0)) throw InvalidArgument("gamma shape must be positive");
  if (shape < 1.0) {
    const double u = uniform();
    return gamma(shape + 1.0) * std::pow(1.0 - u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

double RngStream::beta(double a) {
  const double x = gamma(a);
  const double y = gamma(a);
  return x / (x + y);
}

}  // namespace qrsnap
