// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include "qrsnap/weights_io.hpp"

#include <limits>

#include "binary_io.hpp"
#include "qrsnap/dataset.hpp"
#include "qrsnap/error.hpp"

namespace qrsnap {

std::vector<std::uint8_t> encode_weights(const ModelParams& params) {
  detail::ByteWriter w;
  w.raw("QRWT");
  w.u16(kQrwtVersion);
  w.str(params.architecture().to_string());
  for (const NamedTensor& t : params.tensors()) {
    w.str(t.name);
    w.u8(static_cast<std::uint8_t>(t.value.rank()));
    for (std::size_t d : t.value.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.value.values()) w.f64(v);
  }
  return std::move(w.bytes());
}

ModelParams decode_weights(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes, "QRWT");
  if (bytes.size() < 4 || r.raw(4, "magic") != "QRWT") throw FormatError("QRWT: bad magic");
  if (const auto version = r.u16("version"); version != kQrwtVersion) {
    throw FormatError("QRWT: unsupported version " + std::to_string(version));
  }
  Architecture arch;
  try {
    arch = Architecture::parse(r.str("architecture"));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("QRWT: ") + e.what());
  }
  std::vector<NamedTensor> tensors;
  while (!r.done()) {
    NamedTensor t;
    t.name = r.str("tensor name");
    const std::uint8_t rank = r.u8("rank");
    Shape shape;
    std::size_t count = 1;
    for (std::uint8_t i = 0; i < rank; ++i) {
      const std::uint32_t d = r.u32("dims");
      if (d == 0 || count > std::numeric_limits<std::size_t>::max() / 8 / d) {
        throw FormatError("QRWT: dimension overflow in tensor '" + t.name + "'");
      }
      count *= d;
      shape.push_back(d);
    }
    r.need(count * 8, "tensor data");
    std::vector<double> data(count);
    for (double& v : data) v = r.f64("tensor data");
    t.value = Tensor(std::move(shape), std::move(data));
    tensors.push_back(std::move(t));
  }
  try {
    return ModelParams(std::move(arch), std::move(tensors));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("QRWT: ") + e.what());
  }
}

void save_weights(const ModelParams& params, const std::filesystem::path& path) {
  write_file(path, encode_weights(params));
}

ModelParams load_weights(const std::filesystem::path& path) {
  try {
    return decode_weights(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace qrsnap
