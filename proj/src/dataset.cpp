// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include "qrsnap/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <optional>
#include <cctype>

#include "binary_io.hpp"
#include "qrsnap/error.hpp"
#include "qrsnap/rng.hpp"

namespace qrsnap {
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Dataset

void Dataset::validate() const {
  if (images.size() != labels.size()) throw InvalidArgument("dataset: image/label count mismatch");
  if (class_names.empty()) throw InvalidArgument("dataset: no classes");
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (labels[i] >= class_names.size()) {
      throw InvalidArgument("dataset: label " + std::to_string(labels[i]) + " of sample " +
                            std::to_string(i) + " exceeds class count");
    }
    if (!images[i].same_shape(images.front())) {
      throw InvalidArgument("dataset: sample " + std::to_string(i) + " has a different shape");
    }
    if (!images[i].in_unit_range()) {
      throw InvalidArgument("dataset: sample " + std::to_string(i) + " has pixels outside [0, 1]");
    }
  }
}

// ---------------------------------------------------------------------------
// Synthetic shapes

std::string_view to_string(SynthShape shape) {
  switch (shape) {
    case SynthShape::kDisk: return "disk";
    case SynthShape::kSquare: return "square";
    case SynthShape::kCross: return "cross";
    case SynthShape::kStripes: return "stripes";
  }
  return "disk";
}

SynthShape parse_synth_shape(std::string_view text) {
  for (SynthShape s : {SynthShape::kDisk, SynthShape::kSquare, SynthShape::kCross, SynthShape::kStripes}) {
    if (to_string(s) == text) return s;
  }
  throw InvalidArgument("unknown synthetic class '" + std::string(text) +
                        "' (expected disk, square, cross or stripes)");
}

void SynthConfig::validate() const {
  if (classes.empty()) throw InvalidArgument("synth: no classes");
  if (per_class < 1) throw InvalidArgument("synth: per_class must be >= 1");
  if (height < 8 || width < 8) throw InvalidArgument("synth: image size must be >= 8");
  if (height > 65535 || width > 65535) throw InvalidArgument("synth: image size must fit in 16 bits");
  if (channels < 1 || channels > 255) throw InvalidArgument("synth: channels must lie in [1, 255]");
  if (!(position_jitter >= 0.0 && position_jitter <= 0.5)) {
    throw InvalidArgument("synth: position_jitter must lie in [0, 0.5]");
  }
  if (!(scale_jitter >= 0.0 && scale_jitter < 1.0)) throw InvalidArgument("synth: scale_jitter must lie in [0, 1)");
  if (!(rotation_jitter >= 0.0) || !std::isfinite(rotation_jitter)) {
    throw InvalidArgument("synth: rotation_jitter must be >= 0");
  }
  if (!(background_noise >= 0.0) || !std::isfinite(background_noise)) {
    throw InvalidArgument("synth: background_noise must be >= 0");
  }
}

namespace {

constexpr int kSuperSamples = 4;

struct ShapeDraw {
  SynthShape shape;
  double cx, cy, radius, angle, period, phase;
};

bool inside(const ShapeDraw& d, double x, double y) {
  const double dx = x - d.cx;
  const double dy = y - d.cy;
  const double c = std::cos(d.angle);
  const double s = std::sin(d.angle);
  const double u = c * dx + s * dy;
  const double v = -s * dx + c * dy;
  const double r = d.radius;
  switch (d.shape) {
    case SynthShape::kDisk:
      return u * u + v * v <= r * r;
    case SynthShape::kSquare:
      return std::abs(u) <= 0.8 * r && std::abs(v) <= 0.8 * r;
    case SynthShape::kCross:
      return (std::abs(u) <= 0.3 * r && std::abs(v) <= r) ||
             (std::abs(v) <= 0.3 * r && std::abs(u) <= r);
    case SynthShape::kStripes: {
      const double t = u / d.period + d.phase;
      return t - std::floor(t) < 0.5;
    }
  }
  return false;
}

Image render(const SynthConfig& cfg, SynthShape shape, RngStream stream) {
  const auto h = static_cast<double>(cfg.height);
  const auto w = static_cast<double>(cfg.width);
  const double side = std::min(h, w);

  // Foreground and background sit in opposite brightness bands.
  const bool dark_background = stream.below(2) == 0;
  std::vector<double> bg(cfg.channels);
  std::vector<double> fg(cfg.channels);
  for (std::size_t c = 0; c < cfg.channels; ++c) {
    const double a = 0.05 + 0.3 * stream.uniform();
    const double b = 0.65 + 0.3 * stream.uniform();
    bg[c] = dark_background ? a : b;
    fg[c] = dark_background ? b : a;
  }

  ShapeDraw d{};
  d.shape = shape;
  d.cx = w / 2.0 + (2.0 * stream.uniform() - 1.0) * cfg.position_jitter * side;
  d.cy = h / 2.0 + (2.0 * stream.uniform() - 1.0) * cfg.position_jitter * side;
  d.radius = 0.3 * side * (1.0 + (2.0 * stream.uniform() - 1.0) * cfg.scale_jitter);
  d.angle = (2.0 * stream.uniform() - 1.0) * cfg.rotation_jitter;
  d.period = side * (0.18 + 0.08 * stream.uniform());
  d.phase = stream.uniform();
  if (shape == SynthShape::kStripes) {
    // Diagonal: 45 degrees give or take 15.
    d.angle = std::numbers::pi / 4.0 + (2.0 * stream.uniform() - 1.0) * (std::numbers::pi / 12.0);
  }

  Image img(cfg.height, cfg.width, cfg.channels);
  constexpr double step = 1.0 / kSuperSamples;
  for (std::size_t y = 0; y < cfg.height; ++y) {
    for (std::size_t x = 0; x < cfg.width; ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSuperSamples; ++sy) {
        for (int sx = 0; sx < kSuperSamples; ++sx) {
          hits += inside(d, static_cast<double>(x) + (sx + 0.5) * step,
                         static_cast<double>(y) + (sy + 0.5) * step);
        }
      }
      const double coverage = static_cast<double>(hits) / (kSuperSamples * kSuperSamples);
      for (std::size_t c = 0; c < cfg.channels; ++c) {
        img.at(y, x, c) = bg[c] + coverage * (fg[c] - bg[c]);
      }
    }
  }
  if (cfg.background_noise > 0.0) {
    for (double& p : img.pixels()) {
      p = std::clamp(p + cfg.background_noise * stream.normal(), 0.0, 1.0);
    }
  }
  return img;
}

}  // namespace

Dataset generate_synthetic(const SynthConfig& config) {
  config.validate();
  Dataset out;
  for (SynthShape s : config.classes) out.class_names.emplace_back(to_string(s));
  const std::size_t k = config.classes.size();
  const std::size_t n = k * config.per_class;
  const RngStream root(config.seed);
  out.images.resize(n);
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.labels[i] = i % k;
    out.images[i] = render(config, config.classes[i % k], root.split(Purpose::kSynth, i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// QRDS

std::vector<std::uint8_t> encode_qrds(const Dataset& dataset) {
  dataset.validate();
  const Image& first = dataset.images.empty() ? Image(1, 1, 1) : dataset.images.front();
  if (first.height() > 65535 || first.width() > 65535 || first.channels() > 255 ||
      dataset.classes() > 65535 || dataset.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidArgument("QRDS: dataset dimensions exceed the format limits");
  }
  detail::ByteWriter w;
  w.raw("QRDS");
  w.u16(kQrdsVersion);
  w.u32(static_cast<std::uint32_t>(dataset.size()));
  w.u16(static_cast<std::uint16_t>(first.height()));
  w.u16(static_cast<std::uint16_t>(first.width()));
  w.u8(static_cast<std::uint8_t>(first.channels()));
  w.u16(static_cast<std::uint16_t>(dataset.classes()));
  for (const auto& name : dataset.class_names) w.str(name);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    w.u16(static_cast<std::uint16_t>(dataset.labels[i]));
    for (double p : dataset.images[i].pixels()) {
      w.u8(static_cast<std::uint8_t>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0)));
    }
  }
  return std::move(w.bytes());
}

Dataset decode_qrds(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes, "QRDS");
  if (bytes.size() < 4 || r.raw(4, "magic") != "QRDS") throw FormatError("QRDS: bad magic");
  if (const auto version = r.u16("version"); version != kQrdsVersion) {
    throw FormatError("QRDS: unsupported version " + std::to_string(version));
  }
  const std::uint64_t n = r.u32("header");
  const std::uint64_t h = r.u16("header");
  const std::uint64_t w = r.u16("header");
  const std::uint64_t c = r.u8("header");
  const std::uint64_t k = r.u16("header");
  if (h == 0 || w == 0 || c == 0 || k == 0) {
    throw FormatError("QRDS: dimension overflow (zero-sized dimension in header)");
  }
  Dataset out;
  for (std::uint64_t i = 0; i < k; ++i) out.class_names.push_back(r.str("class names"));
  const std::uint64_t pixels = h * w * c;  // < 2^40
  const std::uint64_t record = 2 + pixels;
  if (n != 0 && record > std::numeric_limits<std::uint64_t>::max() / n) {
    throw FormatError("QRDS: dimension overflow (payload size exceeds 64 bits)");
  }
  if (n * record > r.remaining()) {
    throw FormatError("QRDS: truncated payload (expected " + std::to_string(n * record) +
                      " record bytes, found " + std::to_string(r.remaining()) + ")");
  }
  out.images.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint16_t label = r.u16("record");
    if (label >= k) {
      throw FormatError("QRDS: label " + std::to_string(label) + " of record " + std::to_string(i) +
                        " exceeds class count " + std::to_string(k));
    }
    const std::uint8_t* src = r.take(pixels, "record");
    std::vector<double> px(pixels);
    for (std::size_t j = 0; j < pixels; ++j) px[j] = src[j] / 255.0;
    out.labels.push_back(label);
    out.images.emplace_back(h, w, c, std::move(px));
  }
  if (!r.done()) throw FormatError("QRDS: trailing bytes after last record");
  return out;
}

void save_qrds(const Dataset& dataset, const fs::path& path) {
  write_file(path, encode_qrds(dataset));
}

Dataset load_qrds(const fs::path& path) {
  try {
    return decode_qrds(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// PPM

namespace {

struct Ppm {
  std::size_t width = 0;
  std::size_t height = 0;
  Image image;
};

Ppm read_ppm(const fs::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) -> FormatError {
    return FormatError(path.string() + ": " + why);
  };
  auto skip_space = [&] {
    for (;;) {
      while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        return;
      }
    }
  };
  auto number = [&]() -> std::size_t {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw fail("malformed PPM header");
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + static_cast<std::size_t>(bytes[pos++] - '0');
      if (v > 1'000'000) throw fail("PPM dimension too large");
    }
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw fail("not a binary P6 PPM");
  pos = 2;
  Ppm out;
  out.width = number();
  out.height = number();
  const std::size_t maxval = number();
  if (out.width == 0 || out.height == 0) throw fail("PPM has a zero dimension");
  if (maxval == 0 || maxval > 65535) throw fail("PPM maxval out of range");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw fail("malformed PPM header");
  ++pos;
  const std::size_t sample_bytes = maxval < 256 ? 1 : 2;
  const std::size_t count = out.width * out.height * 3;
  if (bytes.size() - pos < count * sample_bytes) throw fail("truncated PPM pixel data");
  std::vector<double> px(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t v = bytes[pos + i * sample_bytes];
    if (sample_bytes == 2) v = (v << 8) | bytes[pos + i * 2 + 1];
    if (v > maxval) throw fail("PPM sample exceeds maxval");
    px[i] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  out.image = Image(out.height, out.width, 3, std::move(px));
  return out;
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (directories ? entry.is_directory()
                    : entry.is_regular_file() && entry.path().extension() == ".ppm") {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  return out;
}

}  // namespace

Dataset load_ppm_dir(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError("cannot read directory " + root.string());
  Dataset out;
  std::optional<std::pair<std::size_t, std::size_t>> dims;
  fs::path first_file;
  const auto class_dirs = sorted_entries(root, true);
  if (class_dirs.empty()) throw FormatError(root.string() + ": no class subdirectories");
  for (const fs::path& dir : class_dirs) {
    const std::size_t label = out.class_names.size();
    out.class_names.push_back(dir.filename().string());
    const auto files = sorted_entries(dir, false);
    if (files.empty()) throw FormatError("class directory " + dir.string() + " has no .ppm files");
    for (const fs::path& file : files) {
      Ppm ppm = read_ppm(file);
      if (!dims) {
        dims = {ppm.width, ppm.height};
        first_file = file;
      } else if (dims->first != ppm.width || dims->second != ppm.height) {
        throw FormatError(file.string() + ": dimensions " + std::to_string(ppm.width) + "x" +
                          std::to_string(ppm.height) + " differ from " +
                          std::to_string(dims->first) + "x" + std::to_string(dims->second) +
                          " of " + first_file.string());
      }
      out.images.push_back(std::move(ppm.image));
      out.labels.push_back(label);
    }
  }
  return out;
}

void save_ppm(const Image& image, const fs::path& path) {
  if (image.channels() != 3) throw InvalidArgument("save_ppm: need a 3-channel image");
  const std::string header =
      "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (double p : image.pixels()) {
    bytes.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0)));
  }
  write_file(path, bytes);
}

// ---------------------------------------------------------------------------
// Split

std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("split: test fraction must lie in (0, 1)");
  }
  dataset.validate();
  std::vector<std::vector<std::size_t>> by_class(dataset.classes());
  for (std::size_t i = 0; i < dataset.size(); ++i) by_class[dataset.labels[i]].push_back(i);
  std::vector<bool> in_test(dataset.size(), false);
  const RngStream root(seed);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.size() < 2) {
      throw InvalidArgument("split: class '" + dataset.class_names[c] + "' has fewer than 2 samples");
    }
    RngStream stream = root.split(Purpose::kSplit, c);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[stream.below(i)]);
    const auto n = static_cast<double>(idx.size());
    const auto n_test = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(n * test_fraction)), 1,
                                                idx.size() - 1);
    for (std::size_t i = 0; i < n_test; ++i) in_test[idx[i]] = true;
  }
  Dataset train{{}, {}, dataset.class_names};
  Dataset test{{}, {}, dataset.class_names};
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    Dataset& dst = in_test[i] ? test : train;
    dst.images.push_back(dataset.images[i]);
    dst.labels.push_back(dataset.labels[i]);
  }
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Files

std::string digest_hex(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading " + path.string());
  return bytes;
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing " + path.string());
}

}  // namespace qrsnap
