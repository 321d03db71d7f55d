#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jndlc/codec/checkpoint.hpp"
#include "jndlc/data/dataset.hpp"
#include "jndlc/train/train_config.hpp"

namespace jndlc {

/// Supplies the training patches of each epoch. The returned order is part
/// of the deterministic schedule.
class PairSource {
 public:
  virtual ~PairSource() = default;
  virtual std::vector<SamplePair> epoch(int index) const = 0;
};

/// The same fixed pairs every epoch.
class FixedPairSource : public PairSource {
 public:
  explicit FixedPairSource(std::vector<SamplePair> pairs);
  std::vector<SamplePair> epoch(int index) const override;

 private:
  std::vector<SamplePair> pairs_;
};

/// Per epoch: mix labeled and unlabeled manifests, load the pairs and cut
/// aligned patches, all seeded by (seed, epoch). Decoded images are cached.
class ManifestPairSource : public PairSource {
 public:
  ManifestPairSource(DatasetManifest labeled, DatasetManifest unlabeled, PatchSpec patch, std::uint64_t seed);
  std::vector<SamplePair> epoch(int index) const override;

 private:
  const SamplePair& cached(const ManifestEntry& e) const;

  DatasetManifest labeled_;
  DatasetManifest unlabeled_;
  PatchSpec patch_;
  std::uint64_t seed_;
  mutable std::map<std::string, SamplePair> cache_;
};

struct StepLog {
  long long step = 0;
  int epoch = 0;
  double rate_bpp = 0.0;
  double distortion = 0.0;
  double total_loss = 0.0;
  double grad_norm = 0.0;

  bool operator==(const StepLog&) const = default;
};

struct EpochLog {
  int epoch = 0;
  long long steps = 0;
  double mean_rate_bpp = 0.0;
  double mean_distortion = 0.0;
  double mean_total_loss = 0.0;

  bool operator==(const EpochLog&) const = default;
};

struct TrainLog {
  double lambda = 0.0;
  std::vector<StepLog> steps;
  std::vector<EpochLog> epochs;

  /// Trailing moving average of total_loss ending at step index i.
  double smoothed(std::size_t i, int window) const;
  /// Mean total_loss over the first `window` steps.
  double initial(int window) const;
  /// One JSON object per line: steps first, then epoch summaries.
  std::string to_jsonl() const;
  bool operator==(const TrainLog&) const = default;
};

struct StepLoss {
  double rate_bpp = 0.0;
  double distortion = 0.0;
  double total = 0.0;
};

/// Loss of one batch under the configured variant:
/// rate + lambda * scale * D(x_o, x_j, x_hat) with x_hat from the noisy
/// training forward pass. With `accumulate` the gradients are added to
/// params' buffers.
StepLoss batch_loss(const TrainConfig& cfg, CodecParams& params, const Tensor& x_o, const Tensor& x_j,
                    std::uint64_t noise_seed, bool accumulate);

struct TrainResult {
  Checkpoint checkpoint;
  TrainLog log;
};

/// Optional observer called after every optimizer step.
using StepCallback = std::function<void(const StepLog&)>;

/// One run at cfg.loss.lambda. `out_dir`, when set, receives intermediate
/// checkpoints (every cfg.checkpoint_every epochs), the final checkpoint and
/// the JSON-lines log. Throws NumericError (with lambda, step and loss
/// components) the moment a loss or gradient is not finite.
TrainResult train(const TrainConfig& cfg, const PairSource& data, const std::optional<Checkpoint>& init = {},
                  const std::filesystem::path& out_dir = {}, const StepCallback& on_step = {});

/// One run per lambda in cfg.lambdas, ascending. With cfg.warm_start each
/// run starts from the previous result; otherwise from `init` (or fresh
/// parameters).
std::vector<TrainResult> sweep(const TrainConfig& cfg, const PairSource& data,
                               const std::optional<Checkpoint>& init = {}, const std::filesystem::path& out_dir = {},
                               const StepCallback& on_step = {});

/// File name used for a lambda's checkpoint, e.g. "lambda_0.0067.jndk".
std::string checkpoint_name(double lambda);

}  // namespace jndlc
