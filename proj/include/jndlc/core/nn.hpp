#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "jndlc/core/tensor.hpp"

namespace jndlc::nn {

/// Named view of a learnable tensor.
struct ParamRef {
  std::string name;
  Tensor* value;
};

struct ConstParamRef {
  std::string name;
  const Tensor* value;
};

/// A differentiable map on NCHW tensors. Forward is const and thread-safe;
/// backward receives the forward input and writes parameter gradients into
/// `param_grads` (same order as `parameters()`), or skips them when the span
/// is empty.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& x) const = 0;
  virtual Tensor backward(const Tensor& x, const Tensor& grad_out, std::span<Tensor> param_grads) const = 0;

  virtual std::vector<ParamRef> parameters() { return {}; }
  virtual std::vector<ConstParamRef> parameters() const { return {}; }
  /// Re-imposes parameter constraints after an optimizer step.
  virtual void project() {}
  virtual std::unique_ptr<Layer> clone() const = 0;
  virtual std::string kind() const = 0;
};

/// 2-D convolution with square kernel, zero padding.
class Conv2d final : public Layer {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding);

  Tensor forward(const Tensor& x) const override;
  Tensor backward(const Tensor& x, const Tensor& grad_out, std::span<Tensor> param_grads) const override;
  std::vector<ParamRef> parameters() override;
  std::vector<ConstParamRef> parameters() const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }
  std::string kind() const override { return "conv"; }

  Shape output_shape(const Shape& in) const;
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  int in_, out_, kernel_, stride_, pad_;
  Tensor weight_;  // [out, in, k, k]
  Tensor bias_;    // [1, out, 1, 1]
};

/// Transposed convolution: the adjoint of a Conv2d with the same geometry,
/// plus `output_padding` extra rows/cols at the bottom/right.
class ConvTranspose2d final : public Layer {
 public:
  ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride, int padding, int output_padding);

  Tensor forward(const Tensor& x) const override;
  Tensor backward(const Tensor& x, const Tensor& grad_out, std::span<Tensor> param_grads) const override;
  std::vector<ParamRef> parameters() override;
  std::vector<ConstParamRef> parameters() const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<ConvTranspose2d>(*this); }
  std::string kind() const override { return "deconv"; }

  Shape output_shape(const Shape& in) const;
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  int in_, out_, kernel_, stride_, pad_, out_pad_;
  Tensor weight_;  // [in, out, k, k]
  Tensor bias_;    // [1, out, 1, 1]
};

/// Generalized divisive normalization across channels:
///   y_c = x_c / sqrt(beta_c + sum_j gamma_cj x_j^2)
/// or its approximate inverse (multiplication) when `inverse` is set.
class Gdn final : public Layer {
 public:
  Gdn(int channels, bool inverse);

  Tensor forward(const Tensor& x) const override;
  Tensor backward(const Tensor& x, const Tensor& grad_out, std::span<Tensor> param_grads) const override;
  std::vector<ParamRef> parameters() override;
  std::vector<ConstParamRef> parameters() const override;
  void project() override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Gdn>(*this); }
  std::string kind() const override { return inverse_ ? "igdn" : "gdn"; }

  static constexpr double kBetaMin = 1e-6;

 private:
  int channels_;
  bool inverse_;
  Tensor beta_;   // [1, C, 1, 1]
  Tensor gamma_;  // [1, 1, C, C]
};

class LeakyRelu final : public Layer {
 public:
  explicit LeakyRelu(double slope = 0.01) : slope_(slope) {}
  Tensor forward(const Tensor& x) const override;
  Tensor backward(const Tensor& x, const Tensor& grad_out, std::span<Tensor> param_grads) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<LeakyRelu>(*this); }
  std::string kind() const override { return slope_ == 0.0 ? "relu" : "leaky_relu"; }

 private:
  double slope_;
};

/// 2x2 average pooling; an odd trailing row/column is dropped.
class AvgPool2 final : public Layer {
 public:
  Tensor forward(const Tensor& x) const override;
  Tensor backward(const Tensor& x, const Tensor& grad_out, std::span<Tensor> param_grads) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<AvgPool2>(*this); }
  std::string kind() const override { return "avgpool2"; }
};

/// Layer chain with deep-copy semantics and gradient buffers.
class Sequential {
 public:
  Sequential() = default;
  Sequential(const Sequential& other);
  Sequential& operator=(const Sequential& other);
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  void add(std::unique_ptr<Layer> layer);
  std::size_t size() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }
  Layer& layer(std::size_t i) { return *layers_[i]; }

  Tensor forward(const Tensor& x) const;
  /// Forward pass that records every layer's input (activations[i] feeds layer i)
  /// followed by the final output.
  Tensor forward(const Tensor& x, std::vector<Tensor>& activations) const;
  /// Backward from recorded activations. Parameter gradients accumulate into
  /// the internal buffers when `param_grads` is set.
  Tensor backward(const std::vector<Tensor>& activations, const Tensor& grad_out, bool param_grads);
  /// Input gradient only; never touches parameter state.
  Tensor backward_input(const std::vector<Tensor>& activations, const Tensor& grad_out) const;

  std::vector<ParamRef> parameters(const std::string& prefix);
  std::vector<ConstParamRef> parameters(const std::string& prefix) const;
  /// Gradient buffers aligned with parameters().
  std::vector<Tensor*> gradients();
  void zero_grad();
  void project();

 private:
  void ensure_grads();

  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<std::vector<Tensor>> grads_;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases of every
/// conv-like layer in the chain.
void init_uniform_fan_in(Sequential& net, std::uint64_t seed);

}  // namespace jndlc::nn
