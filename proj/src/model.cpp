// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include "qrsnap/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "qrsnap/error.hpp"
#include "qrsnap/parallel.hpp"

namespace qrsnap {
namespace {

struct ParamSpec {
  std::string name;
  Shape shape;
  std::size_t fan_in = 0;
  bool is_bias = false;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::size_t parse_count(std::string_view text, std::string_view context) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || value == 0) {
    throw InvalidArgument("architecture: bad number '" + std::string(text) +
                          "' in '" + std::string(context) + "'");
  }
  return value;
}

std::vector<ParamSpec> param_specs(const Architecture& arch) {
  std::vector<ParamSpec> specs;
  int convs = 0;
  int denses = 0;
  const auto& acts = arch.activations();
  for (std::size_t i = 0; i < arch.layers().size(); ++i) {
    const LayerSpec& layer = arch.layers()[i];
    const FeatureShape& in = acts[i];
    if (layer.kind == LayerSpec::Kind::kConv) {
      const std::string base = "conv" + std::to_string(++convs);
      const auto k = static_cast<std::size_t>(layer.kernel);
      const auto out = static_cast<std::size_t>(layer.out);
      specs.push_back({base + ".weight", {out, in.channels, k, k}, in.channels * k * k, false});
      specs.push_back({base + ".bias", {out}, 0, true});
    } else if (layer.kind == LayerSpec::Kind::kDense) {
      const std::string base = "dense" + std::to_string(++denses);
      const auto out = static_cast<std::size_t>(layer.out);
      specs.push_back({base + ".weight", {out, in.size()}, in.size(), false});
      specs.push_back({base + ".bias", {out}, 0, true});
    }
  }
  return specs;
}

}  // namespace

// ---------------------------------------------------------------------------
// Architecture

Architecture::Architecture(FeatureShape input, std::vector<LayerSpec> layers)
    : input_(input), layers_(std::move(layers)) {
  if (input_.size() == 0) throw InvalidArgument("architecture: empty input shape");
  activations_.push_back(input_);
  FeatureShape cur = input_;
  for (const LayerSpec& layer : layers_) {
    switch (layer.kind) {
      case LayerSpec::Kind::kConv:
        if (layer.kernel < 1 || layer.kernel % 2 == 0 || layer.out < 1) {
          throw InvalidArgument("architecture: conv needs an odd kernel and >= 1 output channel");
        }
        cur.channels = static_cast<std::size_t>(layer.out);
        break;
      case LayerSpec::Kind::kRelu:
      case LayerSpec::Kind::kFlatten:
        break;
      case LayerSpec::Kind::kMaxPool: {
        const auto p = static_cast<std::size_t>(layer.kernel);
        if (layer.kernel < 1 || cur.height < p || cur.width < p) {
          throw InvalidArgument("architecture: pooling window larger than feature map");
        }
        cur.height /= p;
        cur.width /= p;
        break;
      }
      case LayerSpec::Kind::kDense:
        if (layer.out < 1) throw InvalidArgument("architecture: dense needs >= 1 unit");
        cur = {static_cast<std::size_t>(layer.out), 1, 1};
        break;
    }
    activations_.push_back(cur);
  }
}

Architecture Architecture::parse(std::string_view text) {
  std::vector<std::string_view> tokens;
  while (!text.empty()) {
    const auto pos = text.find(';');
    tokens.push_back(trim(text.substr(0, pos)));
    text = pos == std::string_view::npos ? std::string_view{} : text.substr(pos + 1);
  }
  std::erase_if(tokens, [](std::string_view t) { return t.empty(); });
  if (tokens.empty() || !tokens.front().starts_with("input=")) {
    throw InvalidArgument("architecture must start with input=CxHxW");
  }
  FeatureShape input;
  {
    std::string_view dims = tokens.front().substr(6);
    const auto a = dims.find('x');
    const auto b = dims.rfind('x');
    if (a == std::string_view::npos || a == b) {
      throw InvalidArgument("architecture: input must be CxHxW, got '" + std::string(dims) + "'");
    }
    input.channels = parse_count(dims.substr(0, a), tokens.front());
    input.height = parse_count(dims.substr(a + 1, b - a - 1), tokens.front());
    input.width = parse_count(dims.substr(b + 1), tokens.front());
  }
  std::vector<LayerSpec> layers;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const std::string_view tok = tokens[i];
    LayerSpec layer;
    if (tok == "relu") {
      layer.kind = LayerSpec::Kind::kRelu;
    } else if (tok == "flatten") {
      layer.kind = LayerSpec::Kind::kFlatten;
    } else if (tok.starts_with("maxpool")) {
      layer.kind = LayerSpec::Kind::kMaxPool;
      layer.kernel = static_cast<int>(parse_count(tok.substr(7), tok));
    } else if (tok.starts_with("dense=")) {
      layer.kind = LayerSpec::Kind::kDense;
      layer.out = static_cast<int>(parse_count(tok.substr(6), tok));
    } else if (tok.starts_with("conv")) {
      const auto x = tok.find('x');
      const auto eq = tok.find('=');
      if (x == std::string_view::npos || eq == std::string_view::npos || x > eq) {
        throw InvalidArgument("architecture: conv must be convKxK=N, got '" + std::string(tok) + "'");
      }
      const auto k1 = parse_count(tok.substr(4, x - 4), tok);
      const auto k2 = parse_count(tok.substr(x + 1, eq - x - 1), tok);
      if (k1 != k2) throw InvalidArgument("architecture: only square kernels, got '" + std::string(tok) + "'");
      layer.kind = LayerSpec::Kind::kConv;
      layer.kernel = static_cast<int>(k1);
      layer.out = static_cast<int>(parse_count(tok.substr(eq + 1), tok));
    } else {
      throw InvalidArgument("architecture: unknown layer '" + std::string(tok) + "'");
    }
    layers.push_back(layer);
  }
  return Architecture(input, std::move(layers));
}

Architecture Architecture::default_cnn(std::size_t channels, std::size_t height,
                                       std::size_t width, std::size_t classes) {
  using K = LayerSpec::Kind;
  return Architecture({channels, height, width},
                      {{K::kConv, 3, 8},
                       {K::kRelu, 0, 0},
                       {K::kMaxPool, 2, 0},
                       {K::kConv, 3, 16},
                       {K::kRelu, 0, 0},
                       {K::kMaxPool, 2, 0},
                       {K::kFlatten, 0, 0},
                       {K::kDense, 0, static_cast<int>(classes)}});
}

std::string Architecture::to_string() const {
  std::string out = "input=" + std::to_string(input_.channels) + "x" +
                    std::to_string(input_.height) + "x" + std::to_string(input_.width);
  for (const LayerSpec& layer : layers_) {
    out += ";";
    switch (layer.kind) {
      case LayerSpec::Kind::kConv:
        out += "conv" + std::to_string(layer.kernel) + "x" + std::to_string(layer.kernel) +
               "=" + std::to_string(layer.out);
        break;
      case LayerSpec::Kind::kRelu: out += "relu"; break;
      case LayerSpec::Kind::kMaxPool: out += "maxpool" + std::to_string(layer.kernel); break;
      case LayerSpec::Kind::kFlatten: out += "flatten"; break;
      case LayerSpec::Kind::kDense: out += "dense=" + std::to_string(layer.out); break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// ModelParams

ModelParams::ModelParams(Architecture arch, std::vector<NamedTensor> tensors)
    : arch_(std::move(arch)), tensors_(std::move(tensors)) {
  const auto specs = param_specs(arch_);
  if (specs.size() != tensors_.size()) {
    throw InvalidArgument("parameters: expected " + std::to_string(specs.size()) +
                          " tensors for architecture, got " + std::to_string(tensors_.size()));
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (tensors_[i].name != specs[i].name || tensors_[i].value.shape() != specs[i].shape) {
      throw InvalidArgument("parameters: tensor " + std::to_string(i) + " is '" +
                            tensors_[i].name + "' " + shape_string(tensors_[i].value.shape()) +
                            ", expected '" + specs[i].name + "' " + shape_string(specs[i].shape));
    }
  }
}

ModelParams ModelParams::zeros(const Architecture& arch) {
  std::vector<NamedTensor> tensors;
  for (const ParamSpec& spec : param_specs(arch)) {
    tensors.push_back({spec.name, Tensor(spec.shape)});
  }
  return ModelParams(arch, std::move(tensors));
}

ModelParams ModelParams::initialize(const Architecture& arch, RngStream stream) {
  ModelParams params = zeros(arch);
  const auto specs = param_specs(arch);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].is_bias) continue;
    const double bound = std::sqrt(6.0 / static_cast<double>(specs[i].fan_in));
    RngStream local = stream.split(Purpose::kInit, i);
    for (double& w : params.tensors_[i].value.values()) {
      w = (2.0 * local.uniform() - 1.0) * bound;
    }
  }
  return params;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.value.size();
  return n;
}

const Tensor& ModelParams::at(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t.value;
  }
  throw InvalidArgument("no parameter named '" + std::string(name) + "'");
}

Tensor& ModelParams::at(std::string_view name) {
  return const_cast<Tensor&>(std::as_const(*this).at(name));
}

// ---------------------------------------------------------------------------
// Forward / backward kernels

struct TapeAccess {
  using SampleState = Tape::SampleState;
  static Tape::SampleState& sample(Tape& t, std::size_t i) { return t.samples_[i]; }
  static void init(Tape& t, const Architecture& arch, std::size_t n) {
    t.arch_ = arch;
    t.samples_.assign(n, {});
  }
  static void set_logits(Tape& t, Tensor logits) { t.logits_ = std::move(logits); }
  static std::optional<Tensor>& loss_grad(Tape& t) { return t.loss_grad_; }
  static bool& consumed(Tape& t) { return t.consumed_; }
  static const Architecture& arch(const Tape& t) { return t.arch_; }
};

namespace {

using SampleState = TapeAccess::SampleState;

void conv_forward(const FeatureShape& in_shape, std::size_t out_channels, int kernel,
                  const double* in, const Tensor& weight, const Tensor& bias,
                  double* out) {
  const std::size_t H = in_shape.height;
  const std::size_t W = in_shape.width;
  const std::size_t C = in_shape.channels;
  const std::size_t HW = H * W;
  const auto k = static_cast<std::ptrdiff_t>(kernel);
  const std::ptrdiff_t pad = (k - 1) / 2;
  const auto h = static_cast<std::ptrdiff_t>(H);
  const auto w = static_cast<std::ptrdiff_t>(W);
  for (std::size_t o = 0; o < out_channels; ++o) {
    double* plane = out + o * HW;
    std::fill(plane, plane + HW, bias[o]);
    for (std::size_t c = 0; c < C; ++c) {
      const double* src = in + c * HW;
      const double* taps = weight.data().data() + (o * C + c) * static_cast<std::size_t>(k * k);
      for (std::ptrdiff_t ky = 0; ky < k; ++ky) {
        const std::ptrdiff_t dy = ky - pad;
        const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy);
        const std::ptrdiff_t y1 = std::min(h, h - dy);
        for (std::ptrdiff_t kx = 0; kx < k; ++kx) {
          const std::ptrdiff_t dx = kx - pad;
          const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
          const std::ptrdiff_t x1 = std::min(w, w - dx);
          const double tap = taps[ky * k + kx];
          for (std::ptrdiff_t y = y0; y < y1; ++y) {
            double* orow = plane + y * w;
            const double* irow = src + (y + dy) * w + dx;
            for (std::ptrdiff_t x = x0; x < x1; ++x) orow[x] += tap * irow[x];
          }
        }
      }
    }
  }
}

void conv_backward(const FeatureShape& in_shape, std::size_t out_channels, int kernel,
                   const double* in, const Tensor& weight, const double* gout,
                   double* dweight, double* dbias, double* gin /* nullable */) {
  const std::size_t H = in_shape.height;
  const std::size_t W = in_shape.width;
  const std::size_t C = in_shape.channels;
  const std::size_t HW = H * W;
  const auto k = static_cast<std::ptrdiff_t>(kernel);
  const std::ptrdiff_t pad = (k - 1) / 2;
  const auto h = static_cast<std::ptrdiff_t>(H);
  const auto w = static_cast<std::ptrdiff_t>(W);
  for (std::size_t o = 0; o < out_channels; ++o) {
    const double* g = gout + o * HW;
    double sum = 0.0;
    for (std::size_t i = 0; i < HW; ++i) sum += g[i];
    dbias[o] += sum;
    for (std::size_t c = 0; c < C; ++c) {
      const double* src = in + c * HW;
      double* dst = gin == nullptr ? nullptr : gin + c * HW;
      const std::size_t tap_base = (o * C + c) * static_cast<std::size_t>(k * k);
      for (std::ptrdiff_t ky = 0; ky < k; ++ky) {
        const std::ptrdiff_t dy = ky - pad;
        const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy);
        const std::ptrdiff_t y1 = std::min(h, h - dy);
        for (std::ptrdiff_t kx = 0; kx < k; ++kx) {
          const std::ptrdiff_t dx = kx - pad;
          const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
          const std::ptrdiff_t x1 = std::min(w, w - dx);
          const std::size_t tap_index = tap_base + static_cast<std::size_t>(ky * k + kx);
          const double tap = weight[tap_index];
          double acc = 0.0;
          for (std::ptrdiff_t y = y0; y < y1; ++y) {
            const double* grow = g + y * w;
            const double* irow = src + (y + dy) * w + dx;
            for (std::ptrdiff_t x = x0; x < x1; ++x) acc += grow[x] * irow[x];
            if (dst != nullptr) {
              double* drow = dst + (y + dy) * w + dx;
              for (std::ptrdiff_t x = x0; x < x1; ++x) drow[x] += tap * grow[x];
            }
          }
          dweight[tap_index] += acc;
        }
      }
    }
  }
}

/// Runs one sample through the network, keeping every activation.
void forward_sample(const ModelParams& params, const double* input, SampleState& state) {
  const Architecture& arch = params.architecture();
  const auto& shapes = arch.activations();
  const auto& layers = arch.layers();
  state.acts.assign(layers.size() + 1, {});
  state.argmax.assign(layers.size(), {});
  state.acts[0].assign(input, input + shapes[0].size());
  std::size_t p = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& layer = layers[i];
    const FeatureShape& in_shape = shapes[i];
    const FeatureShape& out_shape = shapes[i + 1];
    const std::vector<double>& in = state.acts[i];
    std::vector<double> out(out_shape.size());
    switch (layer.kind) {
      case LayerSpec::Kind::kConv: {
        const Tensor& weight = params.tensors()[p].value;
        const Tensor& bias = params.tensors()[p + 1].value;
        p += 2;
        conv_forward(in_shape, out_shape.channels, layer.kernel, in.data(), weight, bias, out.data());
        break;
      }
      case LayerSpec::Kind::kRelu:
        for (std::size_t j = 0; j < in.size(); ++j) out[j] = in[j] > 0.0 ? in[j] : 0.0;
        break;
      case LayerSpec::Kind::kFlatten:
        out = in;
        break;
      case LayerSpec::Kind::kMaxPool: {
        const auto pool = static_cast<std::size_t>(layer.kernel);
        auto& arg = state.argmax[i];
        arg.resize(out.size());
        for (std::size_t c = 0; c < out_shape.channels; ++c) {
          for (std::size_t y = 0; y < out_shape.height; ++y) {
            for (std::size_t x = 0; x < out_shape.width; ++x) {
              std::size_t best = (c * in_shape.height + y * pool) * in_shape.width + x * pool;
              for (std::size_t py = 0; py < pool; ++py) {
                for (std::size_t px = 0; px < pool; ++px) {
                  const std::size_t idx =
                      (c * in_shape.height + y * pool + py) * in_shape.width + x * pool + px;
                  if (in[idx] > in[best]) best = idx;
                }
              }
              const std::size_t o = (c * out_shape.height + y) * out_shape.width + x;
              out[o] = in[best];
              arg[o] = static_cast<std::uint32_t>(best);
            }
          }
        }
        break;
      }
      case LayerSpec::Kind::kDense: {
        const Tensor& weight = params.tensors()[p].value;
        const Tensor& bias = params.tensors()[p + 1].value;
        p += 2;
        const std::size_t n_in = in.size();
        for (std::size_t o = 0; o < out.size(); ++o) {
          const double* row = weight.data().data() + o * n_in;
          double acc = bias[o];
          for (std::size_t j = 0; j < n_in; ++j) acc += row[j] * in[j];
          out[o] = acc;
        }
        break;
      }
    }
    state.acts[i + 1] = std::move(out);
  }
}

/// Accumulates one sample's parameter gradients into `grad` (flat, tensor
/// order) given dLoss/dlogits for that sample.
void backward_sample(const ModelParams& params, const SampleState& state,
                     std::span<const double> glogits, const std::vector<std::size_t>& offsets,
                     std::vector<double>& grad) {
  const Architecture& arch = params.architecture();
  const auto& shapes = arch.activations();
  const auto& layers = arch.layers();
  std::vector<double> g(glogits.begin(), glogits.end());
  std::size_t p = params.tensors().size();
  for (std::size_t i = layers.size(); i-- > 0;) {
    const LayerSpec& layer = layers[i];
    const FeatureShape& in_shape = shapes[i];
    const std::vector<double>& in = state.acts[i];
    // A parameter layer only propagates further if a layer below it holds
    // parameters too.
    const bool need_input_grad = p > 2;
    std::vector<double> gin;
    switch (layer.kind) {
      case LayerSpec::Kind::kConv: {
        p -= 2;
        const Tensor& weight = params.tensors()[p].value;
        if (need_input_grad) gin.assign(in.size(), 0.0);
        conv_backward(in_shape, shapes[i + 1].channels, layer.kernel, in.data(), weight, g.data(),
                      grad.data() + offsets[p], grad.data() + offsets[p + 1],
                      need_input_grad ? gin.data() : nullptr);
        break;
      }
      case LayerSpec::Kind::kRelu: {
        const std::vector<double>& out = state.acts[i + 1];
        gin.resize(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) gin[j] = out[j] > 0.0 ? g[j] : 0.0;
        break;
      }
      case LayerSpec::Kind::kFlatten:
        gin = std::move(g);
        break;
      case LayerSpec::Kind::kMaxPool: {
        gin.assign(in.size(), 0.0);
        const auto& arg = state.argmax[i];
        for (std::size_t o = 0; o < g.size(); ++o) gin[arg[o]] += g[o];
        break;
      }
      case LayerSpec::Kind::kDense: {
        p -= 2;
        const Tensor& weight = params.tensors()[p].value;
        double* dw = grad.data() + offsets[p];
        double* db = grad.data() + offsets[p + 1];
        const std::size_t n_in = in.size();
        if (need_input_grad) gin.assign(n_in, 0.0);
        for (std::size_t o = 0; o < g.size(); ++o) {
          const double go = g[o];
          db[o] += go;
          double* drow = dw + o * n_in;
          for (std::size_t j = 0; j < n_in; ++j) drow[j] += go * in[j];
          if (need_input_grad) {
            const double* row = weight.data().data() + o * n_in;
            for (std::size_t j = 0; j < n_in; ++j) gin[j] += row[j] * go;
          }
        }
        break;
      }
    }
    if (p == 0 && (layer.kind == LayerSpec::Kind::kConv || layer.kind == LayerSpec::Kind::kDense)) {
      return;
    }
    g = std::move(gin);
  }
}

void check_batch(const Architecture& arch, const Tensor& batch) {
  const FeatureShape& in = arch.input();
  if (batch.rank() != 4 || batch.dim(1) != in.channels || batch.dim(2) != in.height ||
      batch.dim(3) != in.width) {
    throw InvalidArgument("model_forward: batch shape " + shape_string(batch.shape()) +
                          " does not match input [N x " + std::to_string(in.channels) + "x" +
                          std::to_string(in.height) + "x" + std::to_string(in.width) + "]");
  }
}

Tensor forward_into(const ModelParams& params, const Tensor& batch,
                    std::vector<SampleState>& states, bool keep) {
  const Architecture& arch = params.architecture();
  check_batch(arch, batch);
  const std::size_t n = batch.dim(0);
  const std::size_t in_size = arch.input().size();
  const std::size_t k = arch.output_size();
  Tensor logits({n, k});
  states.resize(n);
  parallel_for(n, [&](std::size_t s) {
    SampleState& state = states[s];
    forward_sample(params, batch.data().data() + s * in_size, state);
    std::copy(state.acts.back().begin(), state.acts.back().end(), logits.data().begin() + s * k);
    if (!keep) state = {};
  });
  if (!logits.all_finite()) throw InvalidArgument("model_forward: non-finite logits");
  return logits;
}

void check_targets(const Tensor& logits, const Tensor& targets) {
  if (targets.shape() != logits.shape() || logits.rank() != 2) {
    throw InvalidArgument("loss: targets " + shape_string(targets.shape()) +
                          " do not match logits " + shape_string(logits.shape()));
  }
  const std::size_t k = logits.dim(1);
  for (std::size_t r = 0; r < logits.dim(0); ++r) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double t = targets[r * k + j];
      if (!(t >= 0.0)) throw InvalidArgument("loss: negative target in row " + std::to_string(r));
      sum += t;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw InvalidArgument("loss: target row " + std::to_string(r) + " sums to " +
                            std::to_string(sum) + ", not 1");
    }
  }
}

double log_sum_exp(const double* row, std::size_t k) {
  const double m = *std::max_element(row, row + k);
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) s += std::exp(row[j] - m);
  return m + std::log(s);
}

}  // namespace

ForwardResult model_forward(const ModelParams& params, const Tensor& batch) {
  ForwardResult result;
  std::vector<SampleState> states;
  result.logits = forward_into(params, batch, states, true);
  Tape& tape = result.tape;
  TapeAccess::init(tape, params.architecture(), states.size());
  for (std::size_t s = 0; s < states.size(); ++s) {
    TapeAccess::sample(tape, s) = std::move(states[s]);
  }
  TapeAccess::set_logits(tape, result.logits);
  return result;
}

Tensor model_logits(const ModelParams& params, const Tensor& batch) {
  std::vector<SampleState> states;
  return forward_into(params, batch, states, false);
}

double loss_softmax_ce(const Tensor& logits, const Tensor& targets) {
  check_targets(logits, targets);
  const std::size_t n = logits.dim(0);
  const std::size_t k = logits.dim(1);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = logits.data().data() + r * k;
    const double lse = log_sum_exp(row, k);
    double loss = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double t = targets[r * k + j];
      if (t != 0.0) loss -= t * (row[j] - lse);
    }
    total += loss;
  }
  return std::max(0.0, total / static_cast<double>(n));
}

double loss_softmax_ce(Tape& tape, const Tensor& targets) {
  if (TapeAccess::consumed(tape)) throw InvalidArgument("loss: tape already consumed by backward");
  const Tensor& logits = tape.logits();
  const double loss = loss_softmax_ce(logits, targets);
  const std::size_t n = logits.dim(0);
  const std::size_t k = logits.dim(1);
  Tensor grad = softmax(logits);
  for (std::size_t r = 0; r < n; ++r) {
    double mass = 0.0;
    for (std::size_t j = 0; j < k; ++j) mass += targets[r * k + j];
    for (std::size_t j = 0; j < k; ++j) {
      grad[r * k + j] = (grad[r * k + j] * mass - targets[r * k + j]) / static_cast<double>(n);
    }
  }
  TapeAccess::loss_grad(tape) = std::move(grad);
  return loss;
}

Gradients backward(Tape& tape, const ModelParams& params) {
  if (TapeAccess::consumed(tape)) throw InvalidArgument("backward: tape already consumed");
  if (!tape.has_loss()) throw InvalidArgument("backward: no loss recorded on tape");
  if (!(TapeAccess::arch(tape) == params.architecture())) {
    throw InvalidArgument("backward: tape was recorded for a different architecture");
  }
  TapeAccess::consumed(tape) = true;
  const Tensor& glogits = *TapeAccess::loss_grad(tape);
  const std::size_t n = tape.batch_size();
  const std::size_t k = glogits.dim(1);

  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& t : params.tensors()) {
    offsets.push_back(total);
    total += t.value.size();
  }
  std::vector<std::vector<double>> per_sample(n);
  parallel_for(n, [&](std::size_t s) {
    per_sample[s].assign(total, 0.0);
    backward_sample(params, TapeAccess::sample(tape, s), glogits.data().subspan(s * k, k), offsets,
                    per_sample[s]);
    TapeAccess::sample(tape, s) = {};
  });
  Gradients grads = ModelParams::zeros(params.architecture());
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = 0; t < grads.tensors().size(); ++t) {
      auto dst = grads.tensors()[t].value.data();
      const double* src = per_sample[s].data() + offsets[t];
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }
  return grads;
}

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 2) throw InvalidArgument("softmax: expected [N, K] logits");
  const std::size_t n = logits.dim(0);
  const std::size_t k = logits.dim(1);
  Tensor out(logits.shape());
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = logits.data().data() + r * k;
    const double m = *std::max_element(row, row + k);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      out[r * k + j] = std::exp(row[j] - m);
      s += out[r * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) out[r * k + j] /= s;
  }
  return out;
}

double grad_check(const ModelParams& params, const Tensor& batch, const Tensor& targets,
                  double epsilon, const GradCheckOptions& options) {
  auto fwd = model_forward(params, batch);
  loss_softmax_ce(fwd.tape, targets);
  const Gradients analytic = backward(fwd.tape, params);
  return grad_check_against(params, batch, targets, analytic, epsilon, options);
}

double grad_check_against(const ModelParams& params, const Tensor& batch, const Tensor& targets,
                          const Gradients& analytic, double epsilon,
                          const GradCheckOptions& options) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) {
    throw InvalidArgument("grad_check: epsilon must lie in [1e-7, 1e-3]");
  }
  ModelParams probe = params;
  const RngStream root(options.seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < probe.tensors().size(); ++t) {
    Tensor& tensor = probe.tensors()[t].value;
    const std::size_t size = tensor.size();
    std::vector<std::size_t> picks(size);
    std::iota(picks.begin(), picks.end(), std::size_t{0});
    std::size_t count = size;
    if (options.samples_per_tensor != 0 && options.samples_per_tensor < size) {
      RngStream stream = root.split(Purpose::kGradCheck, t);
      count = options.samples_per_tensor;
      for (std::size_t i = 0; i < count; ++i) {
        std::swap(picks[i], picks[i + stream.below(size - i)]);
      }
    }
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = picks[i];
      const double original = tensor[j];
      tensor[j] = original + epsilon;
      const double up = loss_softmax_ce(model_logits(probe, batch), targets);
      tensor[j] = original - epsilon;
      const double down = loss_softmax_ce(model_logits(probe, batch), targets);
      tensor[j] = original;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic.tensors()[t].value[j];
      const double scale = std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, std::abs(a - numeric) / scale);
    }
  }
  return worst;
}

void sgd_step(ModelParams& params, const Gradients& gradients, double lr, double momentum,
              ModelParams& velocity) {
  if (!(lr >= 0.0)) throw InvalidArgument("sgd_step: lr must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("sgd_step: momentum must lie in [0, 1)");
  auto same_layout = [&](const ModelParams& other) {
    if (other.tensors().size() != params.tensors().size()) return false;
    for (std::size_t t = 0; t < other.tensors().size(); ++t) {
      if (other.tensors()[t].name != params.tensors()[t].name ||
          other.tensors()[t].value.shape() != params.tensors()[t].value.shape()) {
        return false;
      }
    }
    return true;
  };
  if (!same_layout(gradients)) throw InvalidArgument("sgd_step: gradient shapes do not match parameters");
  if (velocity.tensors().empty() && !params.tensors().empty()) {
    velocity = ModelParams::zeros(params.architecture());
  }
  if (!same_layout(velocity)) throw InvalidArgument("sgd_step: velocity shapes do not match parameters");
  for (std::size_t t = 0; t < params.tensors().size(); ++t) {
    auto p = params.tensors()[t].value.data();
    auto v = velocity.tensors()[t].value.data();
    auto g = gradients.tensors()[t].value.data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      v[j] = momentum * v[j] + g[j];
      p[j] -= lr * v[j];
    }
  }
}

}  // namespace qrsnap
