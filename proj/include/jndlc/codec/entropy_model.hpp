#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jndlc/core/tensor.hpp"

namespace jndlc {

/// Per-channel univariate distribution over latent values, discretized into
/// unit bins centred on the integers.
class CumulativeModel {
 public:
  static constexpr double kLikelihoodFloor = 1e-9;

  virtual ~CumulativeModel() = default;
  virtual int channels() const = 0;
  virtual double cdf(int c, double x) const = 0;
  /// c(v + 1/2) - c(v - 1/2), no floor.
  virtual double bin_mass(int c, double v) const { return cdf(c, v + 0.5) - cdf(c, v - 0.5); }

  /// Discretized likelihood, floor-clamped to kLikelihoodFloor.
  double likelihood(int c, double v) const;
  /// Element-wise likelihoods for an [N, C, h, w] latent.
  virtual Tensor likelihood(const Tensor& values) const;

 protected:
  void require_channels(const Tensor& values) const;
};

/// Uniform mass over the integers lo..hi in every channel (continuous uniform
/// on [lo - 1/2, hi + 1/2)).
class UniformCdfModel final : public CumulativeModel {
 public:
  UniformCdfModel(int channels, int lo, int hi);
  int channels() const override { return channels_; }
  double cdf(int c, double x) const override;

 private:
  int channels_;
  int lo_;
  int hi_;
};

/// Fully factorized per-channel density over latent values. Each channel owns
/// a small monotone network whose sigmoid output is a cumulative distribution
/// c(x); the discretized likelihood of integer-centred bins is
/// p(v) = c(v + 1/2) - c(v - 1/2), floor-clamped to kLikelihoodFloor.
///
/// Monotonicity holds by construction: layer matrices pass through softplus
/// (positive), and the per-layer gate x + tanh(a) tanh(x) has derivative
/// 1 + tanh(a) sech^2(x) > 0.
class EntropyModel final : public CumulativeModel {
 public:
  static constexpr int kMaxWidth = 16;

  EntropyModel() = default;
  /// `init_scale` sets the initial spread of every channel's distribution.
  EntropyModel(int channels, std::vector<int> filters = {3, 3, 3}, double init_scale = 10.0,
               std::uint64_t seed = 0);

  int channels() const override { return channels_; }
  const std::vector<int>& filters() const { return filters_; }
  double init_scale() const { return init_scale_; }

  /// Pre-sigmoid cumulative value for channel c.
  double logits(int c, double x) const;
  double cdf(int c, double x) const override;
  double bin_mass(int c, double v) const override;
  using CumulativeModel::likelihood;
  Tensor likelihood(const Tensor& values) const override;
  /// Given dL/dp for every element, accumulates dL/dparams into gradients()
  /// and returns dL/dvalues. Below the floor, gradients pass only when they
  /// would raise the likelihood.
  Tensor likelihood_backward(const Tensor& values, const Tensor& grad_p);

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> gradients() { return grads_; }
  void zero_grad();

  bool operator==(const EntropyModel& other) const;

 private:
  struct Trace;
  struct Channel;
  std::size_t channel_offset(int c) const { return static_cast<std::size_t>(c) * per_channel_; }
  /// Positive matrices, their derivatives and gate factors of channel c.
  void prepare(int c, Channel& ch) const;
  double logits_forward(const Channel& ch, double x, Trace* trace) const;
  double logits_backward(const Channel& ch, const Trace& trace, double grad_out, double* grad_params) const;
  double bin_mass(const Channel& ch, double v) const;

  int channels_ = 0;
  std::vector<int> filters_;
  std::vector<int> dims_;  // 1, filters..., 1
  double init_scale_ = 10.0;
  std::size_t per_channel_ = 0;
  std::vector<double> params_;
  std::vector<double> grads_;
};

}  // namespace jndlc
