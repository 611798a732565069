// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qrsnap/rng.hpp"
#include "qrsnap/tensor.hpp"

namespace qrsnap {

struct LayerSpec {
  enum class Kind { kConv, kRelu, kMaxPool, kFlatten, kDense };
  Kind kind = Kind::kRelu;
  int kernel = 0;  // conv kernel size or pooling window
  int out = 0;     // conv output channels or dense units

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Activation geometry (channels, height, width) between two layers.
struct FeatureShape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const { return channels * height * width; }
  friend bool operator==(const FeatureShape&, const FeatureShape&) = default;
};

/// Layer list plus input geometry.
///
/// Text form: `input=3x32x32;conv3x3=8;relu;maxpool2;flatten;dense=4`.
/// Convolutions use zero padding (k-1)/2 so spatial size is preserved;
/// `dense` flattens its input implicitly.
class Architecture {
 public:
  Architecture() = default;
  Architecture(FeatureShape input, std::vector<LayerSpec> layers);

  static Architecture parse(std::string_view text);
  /// conv3x3(C->8) relu pool conv3x3(8->16) relu pool flatten dense(K).
  static Architecture default_cnn(std::size_t channels = 3,
                                  std::size_t height = 32,
                                  std::size_t width = 32,
                                  std::size_t classes = 4);

  std::string to_string() const;
  const FeatureShape& input() const { return input_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  /// Shapes of every activation: entry 0 is the input, entry i+1 the output
  /// of layer i.
  const std::vector<FeatureShape>& activations() const { return activations_; }
  std::size_t output_size() const { return activations_.back().size(); }

  friend bool operator==(const Architecture& a, const Architecture& b) {
    return a.input_ == b.input_ && a.layers_ == b.layers_;
  }

 private:
  FeatureShape input_;
  std::vector<LayerSpec> layers_;
  std::vector<FeatureShape> activations_;
};

struct NamedTensor {
  std::string name;
  Tensor value;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Parameters of one network. Tensors are stored in layer order:
/// `convN.weight` [out, in, k, k], `convN.bias` [out], `denseN.weight`
/// [out, in], `denseN.bias` [out].
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(Architecture arch, std::vector<NamedTensor> tensors);

  static ModelParams zeros(const Architecture& arch);
  /// Fan-in scaled uniform weights, U(-sqrt(6/fan_in), sqrt(6/fan_in)),
  /// zero biases.
  static ModelParams initialize(const Architecture& arch, RngStream stream);

  const Architecture& architecture() const { return arch_; }
  std::vector<NamedTensor>& tensors() { return tensors_; }
  const std::vector<NamedTensor>& tensors() const { return tensors_; }
  std::size_t parameter_count() const;
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  Architecture arch_;
  std::vector<NamedTensor> tensors_;
};

/// Same names and shapes as the parameters they differentiate.
using Gradients = ModelParams;

/// Saved forward state for exactly one backward pass.
class Tape {
 public:
  std::size_t batch_size() const { return samples_.size(); }
  bool has_loss() const { return loss_grad_.has_value(); }
  bool consumed() const { return consumed_; }
  const Tensor& logits() const { return logits_; }

 private:
  friend struct TapeAccess;

  struct SampleState {
    std::vector<std::vector<double>> acts;             // per layer input + final
    std::vector<std::vector<std::uint32_t>> argmax;    // per pooling layer
  };

  Architecture arch_;
  std::vector<SampleState> samples_;
  Tensor logits_;
  std::optional<Tensor> loss_grad_;
  bool consumed_ = false;
};

struct ForwardResult {
  Tensor logits;  // [N, K]
  Tape tape;
};

/// Runs the network on an [N, C, H, W] batch and records a tape.
ForwardResult model_forward(const ModelParams& params, const Tensor& batch);

/// Forward pass without recording (inference).
Tensor model_logits(const ModelParams& params, const Tensor& batch);

/// Mean over rows of -sum_k target_k * log softmax(logits)_k.
double loss_softmax_ce(const Tensor& logits, const Tensor& targets);

/// Same loss, and records dLoss/dlogits on the tape for `backward`.
double loss_softmax_ce(Tape& tape, const Tensor& targets);

/// Gradients of the recorded loss. A tape supports one call.
Gradients backward(Tape& tape, const ModelParams& params);

/// Row-wise softmax of [N, K] logits.
Tensor softmax(const Tensor& logits);

struct GradCheckOptions {
  /// Entries sampled per tensor; 0 checks every entry.
  std::size_t samples_per_tensor = 8;
  std::uint64_t seed = 0;
};

/// Max over sampled parameters of
/// |analytic - central difference| / max(1, |analytic|, |numeric|).
double grad_check(const ModelParams& params, const Tensor& batch,
                  const Tensor& targets, double epsilon,
                  const GradCheckOptions& options = {});

/// As `grad_check`, but compares the supplied analytic gradients.
double grad_check_against(const ModelParams& params, const Tensor& batch,
                          const Tensor& targets, const Gradients& analytic,
                          double epsilon, const GradCheckOptions& options = {});

/// v <- momentum * v + grad; p <- p - lr * v. An empty velocity is treated
/// as zeros of the right shape.
void sgd_step(ModelParams& params, const Gradients& gradients, double lr,
              double momentum, ModelParams& velocity);

}  // namespace qrsnap
