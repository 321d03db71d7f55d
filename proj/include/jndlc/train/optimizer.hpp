#pragma once

#include <span>
#include <vector>

#include "jndlc/train/train_config.hpp"

namespace jndlc {

/// Adam with bias correction over a fixed list of parameter blocks.
class Adam {
 public:
  Adam(AdamOptions opts, double learning_rate);

  /// One update; `params` and `grads` must keep the same block layout
  /// across calls.
  void step(const std::vector<std::span<double>>& params, const std::vector<std::span<double>>& grads);

  long long steps() const { return t_; }
  double learning_rate() const { return lr_; }

 private:
  AdamOptions opts_;
  double lr_;
  long long t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// L2 norm over all gradient blocks.
double global_norm(const std::vector<std::span<double>>& grads);

/// Rescales the gradients so their global norm is at most `max_norm`;
/// returns the norm before clipping. max_norm <= 0 disables clipping.
double clip_global_norm(const std::vector<std::span<double>>& grads, double max_norm);

}  // namespace jndlc
