// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qrsnap/model.hpp"

namespace qrsnap {

/// QRWT snapshot layout (little-endian):
///   "QRWT" | u16 version | u32 len + architecture text |
///   per tensor: u32 len + name | u8 rank | u32 dims[rank] | f64 data[]
inline constexpr std::uint16_t kQrwtVersion = 1;

std::vector<std::uint8_t> encode_weights(const ModelParams& params);
ModelParams decode_weights(const std::vector<std::uint8_t>& bytes);

void save_weights(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_weights(const std::filesystem::path& path);

}  // namespace qrsnap
