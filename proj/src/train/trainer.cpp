#include "jndlc/train/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "jndlc/codec/quantizer.hpp"
#include "jndlc/core/binary_io.hpp"
#include "jndlc/core/error.hpp"
#include "jndlc/core/kv_config.hpp"
#include "jndlc/core/rng.hpp"
#include "jndlc/losses/losses.hpp"
#include "jndlc/train/optimizer.hpp"

namespace jndlc {

using nlohmann::json;

FixedPairSource::FixedPairSource(std::vector<SamplePair> pairs) : pairs_(std::move(pairs)) {}

std::vector<SamplePair> FixedPairSource::epoch(int) const { return pairs_; }

ManifestPairSource::ManifestPairSource(DatasetManifest labeled, DatasetManifest unlabeled, PatchSpec patch,
                                       std::uint64_t seed)
    : labeled_(std::move(labeled)), unlabeled_(std::move(unlabeled)), patch_(patch), seed_(seed) {}

const SamplePair& ManifestPairSource::cached(const ManifestEntry& e) const {
  const std::string key = to_string(e.source) + ":" + e.image_id;
  auto it = cache_.find(key);
  if (it == cache_.end()) it = cache_.emplace(key, load_pair(e)).first;
  return it->second;
}

std::vector<SamplePair> ManifestPairSource::epoch(int index) const {
  const auto e = static_cast<std::uint64_t>(index);
  const std::vector<ManifestEntry> stream = mix_sources(labeled_, unlabeled_, derive_seed(seed_, e));
  PatchSpec spec = patch_;
  spec.seed = derive_seed(patch_.seed, derive_seed(seed_, e) + 1);
  std::vector<SamplePair> out;
  for (const auto& entry : stream) {
    for (auto& p : extract_aligned_patches(cached(entry), spec)) out.push_back(std::move(p));
  }
  return out;
}

double TrainLog::smoothed(std::size_t i, int window) const {
  if (i >= steps.size()) throw ArgumentError("TrainLog::smoothed: step index out of range");
  const std::size_t w = static_cast<std::size_t>(std::max(window, 1));
  const std::size_t first = i + 1 >= w ? i + 1 - w : 0;
  double s = 0.0;
  for (std::size_t k = first; k <= i; ++k) s += steps[k].total_loss;
  return s / static_cast<double>(i + 1 - first);
}

double TrainLog::initial(int window) const {
  if (steps.empty()) throw ArgumentError("TrainLog::initial: empty log");
  const std::size_t n = std::min(steps.size(), static_cast<std::size_t>(std::max(window, 1)));
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += steps[k].total_loss;
  return s / static_cast<double>(n);
}

std::string TrainLog::to_jsonl() const {
  std::ostringstream os;
  for (const auto& s : steps) {
    os << json{{"type", "step"},
               {"lambda", lambda},
               {"step", s.step},
               {"epoch", s.epoch},
               {"rate_bpp", s.rate_bpp},
               {"distortion", s.distortion},
               {"total_loss", s.total_loss},
               {"grad_norm", s.grad_norm}}
              .dump()
       << '\n';
  }
  for (const auto& e : epochs) {
    os << json{{"type", "epoch"},
               {"lambda", lambda},
               {"epoch", e.epoch},
               {"steps", e.steps},
               {"mean_rate_bpp", e.mean_rate_bpp},
               {"mean_distortion", e.mean_distortion},
               {"mean_total_loss", e.mean_total_loss}}
              .dump()
       << '\n';
  }
  return os.str();
}

StepLoss batch_loss(const TrainConfig& cfg, CodecParams& params, const Tensor& x_o, const Tensor& x_j,
                    std::uint64_t noise_seed, bool accumulate) {
  const ForwardRecord rec = forward_train(x_o, params, noise_seed);
  const ValueGrad d = routed_distortion(cfg.loss, x_o, x_j, rec.reconstruction);
  const Shape s = x_o.shape();
  const std::int64_t pixels = static_cast<std::int64_t>(s.n) * s.h * s.w;
  const double scale = cfg.loss.lambda * cfg.loss.rd_distortion_scale();
  StepLoss out;
  out.distortion = d.value;
  if (!accumulate) {
    out.rate_bpp = estimate_rate_bpp(rec.quantized, params.entropy, pixels);
    out.total = out.rate_bpp + scale * out.distortion;
    return out;
  }
  const RateWithGrad rate = estimate_rate_bpp_backward(rec.quantized, params.entropy, pixels);
  out.rate_bpp = rate.bpp;
  out.total = out.rate_bpp + scale * out.distortion;
  Tensor grad_recon = d.grad;
  grad_recon *= scale;
  backward_train(rec, grad_recon, rate.grad_latent, params);
  return out;
}

std::string checkpoint_name(double lambda) { return "lambda_" + format_double(lambda) + ".jndk"; }

namespace {

std::string diagnostics(double lambda, long long step, const StepLoss& l) {
  return "lambda=" + format_double(lambda) + " step=" + std::to_string(step) +
         " rate_bpp=" + format_double(l.rate_bpp) + " distortion=" + format_double(l.distortion) +
         " total=" + format_double(l.total);
}

json loss_json(const LossConfig& l) {
  return {{"variant", to_string(l.variant)},
          {"family", to_string(l.family)},
          {"lambda", l.lambda},
          {"omega", l.omega},
          {"iwl_clamp", l.iwl_clamp},
          {"fwl_pixel_follows_family", l.fwl_pixel_follows_family},
          {"feature_extractor_id", l.feature_extractor_id}};
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const PairSource& data, const std::optional<Checkpoint>& init,
                  const std::filesystem::path& out_dir, const StepCallback& on_step) {
  cfg.validate();
  const double lambda = cfg.loss.lambda;
  CodecParams params = init ? init->params : CodecParams::create(cfg.arch, derive_seed(cfg.seed, 1));
  if (!(params.arch == cfg.arch)) {
    throw ConfigError("initial checkpoint architecture differs from the configured one");
  }
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  Adam opt(cfg.adam, cfg.learning_rate);
  TrainResult result;
  result.log.lambda = lambda;
  long long step = 0;
  int epochs_done = 0;
  bool stop = false;
  for (int epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
    const std::vector<SamplePair> pairs = data.epoch(epoch);
    if (pairs.empty()) throw ArgumentError("training data is empty in epoch " + std::to_string(epoch));
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(cfg.seed, 0x100000000ULL + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

    EpochLog elog;
    elog.epoch = epoch;
    for (std::size_t first = 0; first < order.size() && !stop; first += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t count = std::min(order.size() - first, static_cast<std::size_t>(cfg.batch_size));
      std::vector<Tensor> xo, xj;
      for (std::size_t k = 0; k < count; ++k) {
        xo.push_back(pairs[order[first + k]].x_o);
        xj.push_back(pairs[order[first + k]].x_j);
      }
      const Tensor batch_o = Tensor::stack(xo);
      const Tensor batch_j = Tensor::stack(xj);

      params.zero_grad();
      StepLoss l;
      try {
        l = batch_loss(cfg, params, batch_o, batch_j, derive_seed(cfg.seed, 0x200000000ULL + step), true);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (lambda=" + format_double(lambda) +
                           " step=" + std::to_string(step) + ")");
      }
      if (!std::isfinite(l.total) || !std::isfinite(l.rate_bpp) || !std::isfinite(l.distortion)) {
        throw NumericError("non-finite training loss: " + diagnostics(lambda, step, l));
      }
      const auto grads = params.gradient_blocks();
      const double norm = clip_global_norm(grads, cfg.grad_clip);
      if (!std::isfinite(norm)) throw NumericError("non-finite gradient: " + diagnostics(lambda, step, l));
      opt.step(params.parameter_blocks(), grads);
      params.project();

      StepLog s{step, epoch, l.rate_bpp, l.distortion, l.total, norm};
      result.log.steps.push_back(s);
      if (on_step) on_step(s);
      elog.steps += 1;
      elog.mean_rate_bpp += l.rate_bpp;
      elog.mean_distortion += l.distortion;
      elog.mean_total_loss += l.total;
      ++step;
      if (cfg.max_steps > 0 && step >= cfg.max_steps) stop = true;
    }
    if (elog.steps > 0) {
      const double n = static_cast<double>(elog.steps);
      elog.mean_rate_bpp /= n;
      elog.mean_distortion /= n;
      elog.mean_total_loss /= n;
    }
    result.log.epochs.push_back(elog);
    epochs_done = epoch + 1;
    if (!out_dir.empty() && cfg.checkpoint_every > 0 && epochs_done % cfg.checkpoint_every == 0 &&
        epochs_done < cfg.epochs && !stop) {
      Checkpoint mid{params, {{"lambda", lambda}, {"epoch", epochs_done}, {"step", step}}};
      save_checkpoint(out_dir / ("lambda_" + format_double(lambda) + "_epoch" + std::to_string(epochs_done) +
                                 ".jndk"),
                      mid);
    }
  }

  const auto& log = result.log;
  json stats = {{"steps", step}};
  if (!log.steps.empty()) {
    stats["initial"] = log.initial(cfg.smoothing_window);
    stats["final_smoothed"] = log.smoothed(log.steps.size() - 1, cfg.smoothing_window);
    stats["final_rate_bpp"] = log.steps.back().rate_bpp;
    stats["final_distortion"] = log.steps.back().distortion;
  }
  result.checkpoint.params = std::move(params);
  result.checkpoint.metadata = {{"lambda", lambda},
                                {"loss", loss_json(cfg.loss)},
                                {"train_config", cfg.to_text()},
                                {"seed", cfg.seed},
                                {"epoch", epochs_done},
                                {"step", step},
                                {"warm_started", init.has_value()},
                                {"loss_stats", stats}};
  if (!out_dir.empty()) {
    save_checkpoint(out_dir / checkpoint_name(lambda), result.checkpoint);
    write_text_atomic(out_dir / ("lambda_" + format_double(lambda) + ".log.jsonl"), log.to_jsonl());
  }
  return result;
}

std::vector<TrainResult> sweep(const TrainConfig& cfg, const PairSource& data, const std::optional<Checkpoint>& init,
                               const std::filesystem::path& out_dir, const StepCallback& on_step) {
  cfg.validate();
  std::vector<TrainResult> out;
  for (double lambda : cfg.lambdas) {
    TrainConfig run = cfg;
    run.loss.lambda = lambda;
    std::optional<Checkpoint> start = init;
    if (cfg.warm_start && !out.empty()) start = out.back().checkpoint;
    out.push_back(train(run, data, start, out_dir, on_step));
  }
  return out;
}

}  // namespace jndlc
