// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include "qrsnap/rqmixup.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "qrsnap/error.hpp"

namespace qrsnap {
namespace {

double parse_real(std::string_view text, std::string_view context) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw InvalidArgument("bad number in '" + std::string(context) + "'");
  }
  return v;
}

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// lambda * a + mu * b, clamped to [min(a, b), max(a, b)] against rounding;
// equal inputs come back unchanged.
double convex(double lambda, double mu, double a, double b) {
  if (a == b) return a;
  return std::clamp(lambda * a + mu * b, std::min(a, b), std::max(a, b));
}

}  // namespace

std::vector<double> one_hot(std::size_t label, std::size_t classes) {
  if (label >= classes) throw InvalidArgument("label out of range");
  std::vector<double> y(classes, 0.0);
  y[label] = 1.0;
  return y;
}

double LambdaLaw::draw(RngStream& stream) const {
  switch (kind) {
    case Kind::kFixed: return value;
    case Kind::kUniform01: return stream.uniform();
    case Kind::kBeta: return stream.beta(value);
  }
  return value;
}

void MixPolicy::validate() const {
  if (lambda_law.kind == LambdaLaw::Kind::kFixed &&
      !(lambda_law.value >= 0.0 && lambda_law.value <= 1.0)) {
    throw InvalidArgument("fixed lambda must lie in [0, 1]");
  }
  if (lambda_law.kind == LambdaLaw::Kind::kBeta &&
      !(lambda_law.value > 0.0 && std::isfinite(lambda_law.value))) {
    throw InvalidArgument("beta parameter must be positive");
  }
}

LambdaLaw parse_lambda_law(std::string_view text) {
  if (text == "uniform") return LambdaLaw::uniform01();
  LambdaLaw law;
  if (text.starts_with("fixed:")) {
    law = LambdaLaw::fixed(parse_real(text.substr(6), text));
  } else if (text.starts_with("beta:")) {
    law = LambdaLaw::beta(parse_real(text.substr(5), text));
  } else {
    throw InvalidArgument("unknown lambda law '" + std::string(text) +
                          "' (expected uniform, fixed:<l> or beta:<a>)");
  }
  MixPolicy{law}.validate();
  return law;
}

std::string to_string(const LambdaLaw& law) {
  switch (law.kind) {
    case LambdaLaw::Kind::kFixed: return "fixed:" + format_real(law.value);
    case LambdaLaw::Kind::kUniform01: return "uniform";
    case LambdaLaw::Kind::kBeta: return "beta:" + format_real(law.value);
  }
  return "uniform";
}

Pairing parse_pairing(std::string_view text) {
  if (text == "same") return Pairing::kSameSample;
  if (text == "shuffled") return Pairing::kShuffledWithinBatch;
  throw InvalidArgument("unknown pairing '" + std::string(text) + "' (expected same or shuffled)");
}

std::string_view to_string(Pairing pairing) {
  return pairing == Pairing::kSameSample ? "same" : "shuffled";
}

DrawScope parse_draw_scope(std::string_view text) {
  if (text == "batch") return DrawScope::kPerBatch;
  if (text == "sample") return DrawScope::kPerSample;
  throw InvalidArgument("unknown draw scope '" + std::string(text) + "' (expected batch or sample)");
}

std::string_view to_string(DrawScope scope) {
  return scope == DrawScope::kPerBatch ? "batch" : "sample";
}

Sample mix_pair(const Sample& clean, const Sample& noisy, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("mix_pair: lambda must lie in [0, 1]");
  if (!clean.x.same_shape(noisy.x)) throw InvalidArgument("mix_pair: image shapes differ");
  if (clean.y.size() != noisy.y.size()) throw InvalidArgument("mix_pair: label lengths differ");
  if (lambda == 1.0) return clean;
  if (lambda == 0.0) return noisy;
  const double mu = 1.0 - lambda;
  Sample out = clean;
  auto xf = out.x.pixels();
  auto xn = noisy.x.pixels();
  for (std::size_t i = 0; i < xf.size(); ++i) xf[i] = convex(lambda, mu, xf[i], xn[i]);
  for (std::size_t i = 0; i < out.y.size(); ++i) out.y[i] = convex(lambda, mu, out.y[i], noisy.y[i]);
  return out;
}

std::vector<Sample> mix_batch(std::span<const Sample> batch, const LevelFamily& family,
                              const MixPolicy& policy, RngStream stream) {
  if (batch.empty()) throw InvalidArgument("mix_batch: empty batch");
  policy.validate();
  const std::size_t n = batch.size();
  const DistortionSpec spec = sample_level(family, stream);

  std::vector<std::size_t> partner(n);
  std::iota(partner.begin(), partner.end(), std::size_t{0});
  if (policy.pairing == Pairing::kShuffledWithinBatch) {
    for (std::size_t i = n; i > 1; --i) std::swap(partner[i - 1], partner[stream.below(i)]);
  }

  std::vector<double> lambdas(n);
  if (policy.draw_scope == DrawScope::kPerBatch) {
    std::fill(lambdas.begin(), lambdas.end(), policy.lambda_law.draw(stream));
  } else {
    for (double& l : lambdas) l = policy.lambda_law.draw(stream);
  }

  std::vector<Sample> noisy(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream noise = stream.split(Purpose::kNoise, i);
    noisy[i] = Sample{distort(batch[i].x, spec, noise), batch[i].y};
  }

  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(mix_pair(batch[i], noisy[partner[i]], lambdas[i]));
  return out;
}

}  // namespace qrsnap
