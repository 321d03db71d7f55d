#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "jndlc/codec/codec.hpp"
#include "jndlc/data/dataset.hpp"
#include "jndlc/losses/loss_config.hpp"

namespace jndlc {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Everything a training run or sweep needs besides data. `loss.lambda` is
/// the multiplier of a single run; `lambdas` is the sweep grid.
struct TrainConfig {
  LossConfig loss;
  std::vector<double> lambdas{0.0067};
  int epochs = 1;
  int batch_size = 8;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  /// Stop after this many optimizer steps (0: run all epochs).
  int max_steps = 0;
  PatchSpec patch{64, 1, 0};
  ArchDescriptor arch;
  AdamOptions adam;
  /// Global gradient-norm clip (0 disables).
  double grad_clip = 1.0;
  /// Initialise each sweep run from the previous lambda's result.
  bool warm_start = false;
  /// Write an intermediate checkpoint every K epochs (0: only at the end).
  int checkpoint_every = 0;
  /// Window of the moving average reported as the smoothed loss.
  int smoothing_window = 20;

  /// Throws ConfigError on invalid values (empty or non-increasing lambdas,
  /// non-positive sizes, patch not divisible by the downsampling factor).
  void validate() const;

  std::string to_text() const;
  /// Starts from defaults; unknown keys are rejected. `lambdas` accepts a
  /// comma-separated list or a preset name.
  static TrainConfig from_text(std::string_view text);
  /// Applies one key; returns false for unknown keys.
  bool set(const std::string& key, const std::string& value);

  /// "desk": 64x64 patches, small channel counts, three lambdas, minutes on
  /// one core. "paper": 256x256 patches, batch 16, lr 1e-4, 100 epochs, six
  /// lambdas.
  static TrainConfig preset(const std::string& name);
};

}  // namespace jndlc
