// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0
//
// Straight-line reference forward pass used as a test oracle. It shares no
// code with the library's forward implementation: every layer is a plain
// nested loop over explicitly indexed CHW arrays.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qrsnap/image.hpp"
#include "qrsnap/model.hpp"

namespace qrsnap::oracle {

inline std::vector<double> logits(const ModelParams& params, const Image& image) {
  const Architecture& arch = params.architecture();
  std::size_t C = image.channels(), H = image.height(), W = image.width();
  std::vector<double> a(C * H * W);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) a[(c * H + y) * W + x] = image.at(y, x, c);

  int conv = 0, dense = 0;
  for (const LayerSpec& L : arch.layers()) {
    switch (L.kind) {
      case LayerSpec::Kind::kConv: {
        const std::string base = "conv" + std::to_string(++conv);
        const Tensor& w = params.at(base + ".weight");
        const Tensor& b = params.at(base + ".bias");
        const int k = L.kernel, pad = (k - 1) / 2;
        const std::size_t O = static_cast<std::size_t>(L.out);
        std::vector<double> out(O * H * W);
        for (std::size_t o = 0; o < O; ++o)
          for (long y = 0; y < static_cast<long>(H); ++y)
            for (long x = 0; x < static_cast<long>(W); ++x) {
              double s = b[o];
              for (std::size_t c = 0; c < C; ++c)
                for (int ky = 0; ky < k; ++ky)
                  for (int kx = 0; kx < k; ++kx) {
                    const long iy = y + ky - pad, ix = x + kx - pad;
                    if (iy < 0 || ix < 0 || iy >= static_cast<long>(H) || ix >= static_cast<long>(W)) continue;
                    s += w[((o * C + c) * k + ky) * k + kx] * a[(c * H + iy) * W + ix];
                  }
              out[(o * H + y) * W + x] = s;
            }
        a = std::move(out);
        C = O;
        break;
      }
      case LayerSpec::Kind::kRelu:
        for (double& v : a) v = v > 0 ? v : 0;
        break;
      case LayerSpec::Kind::kMaxPool: {
        const std::size_t p = static_cast<std::size_t>(L.kernel);
        const std::size_t h = H / p, wd = W / p;
        std::vector<double> out(C * h * wd);
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < wd; ++x) {
              double m = -INFINITY;
              for (std::size_t dy = 0; dy < p; ++dy)
                for (std::size_t dx = 0; dx < p; ++dx) m = std::max(m, a[(c * H + y * p + dy) * W + x * p + dx]);
              out[(c * h + y) * wd + x] = m;
            }
        a = std::move(out);
        H = h;
        W = wd;
        break;
      }
      case LayerSpec::Kind::kFlatten:
        C = C * H * W;
        H = W = 1;
        break;
      case LayerSpec::Kind::kDense: {
        const std::string base = "dense" + std::to_string(++dense);
        const Tensor& w = params.at(base + ".weight");
        const Tensor& b = params.at(base + ".bias");
        const std::size_t O = static_cast<std::size_t>(L.out), I = a.size();
        std::vector<double> out(O);
        for (std::size_t o = 0; o < O; ++o) {
          double s = b[o];
          for (std::size_t i = 0; i < I; ++i) s += w[o * I + i] * a[i];
          out[o] = s;
        }
        a = std::move(out);
        C = O;
        H = W = 1;
        break;
      }
    }
  }
  return a;
}

inline std::vector<double> softmax(const std::vector<double>& z) {
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  double s = 0;
  std::vector<double> p(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) s += p[i] = std::exp(z[i] - m);
  for (double& v : p) v /= s;
  return p;
}

inline Image random_image(std::size_t h, std::size_t w, std::size_t c, RngStream stream) {
  Image img(h, w, c);
  for (double& p : img.pixels()) p = stream.uniform();
  return img;
}

}  // namespace qrsnap::oracle
