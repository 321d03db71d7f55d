#include "jndlc/losses/losses.hpp"

#include "jndlc/core/error.hpp"

namespace jndlc {

ValueGrad loss_baseline(const Tensor& x_o, const Tensor& x_hat, DistortionFamily family) {
  return distortion_grad(x_o, x_hat, family);
}

ValueGrad loss_pwl(const Tensor& x_j, const Tensor& x_hat, DistortionFamily family) {
  return distortion_grad(x_j, x_hat, family);
}

ValueGrad loss_iwl(const Tensor& x_o, const Tensor& x_j, const Tensor& x_hat, DistortionFamily family, bool clamp) {
  require_same_shape(x_o, x_j, "loss_iwl");
  ValueGrad out = distortion_grad(x_o, x_hat, family);
  out.value -= distortion(x_o, x_j, family);
  if (clamp && out.value < 0.0) {
    out.value = 0.0;
    out.grad.fill(0.0);
  }
  return out;
}

ValueGrad feature_mse(const Tensor& a, const Tensor& b, const FeatureExtractor& features) {
  require_same_shape(a, b, "feature_mse");
  FeatureExtractor::Record rec;
  const FeatureStack fa = features.extract(a, rec);
  const FeatureStack fb = features.extract(b);
  const double taps = static_cast<double>(fa.size());
  ValueGrad out;
  std::vector<Tensor> tap_grads;
  tap_grads.reserve(fa.size());
  for (std::size_t t = 0; t < fa.size(); ++t) {
    const ValueGrad d = distortion_grad(fb[t], fa[t], DistortionFamily::mse);
    out.value += d.value / taps;
    tap_grads.push_back(d.grad);
    tap_grads.back() *= 1.0 / taps;
  }
  out.grad = features.backward(rec, tap_grads);
  return out;
}

ValueGrad loss_fwl(const Tensor& x_o, const Tensor& x_j, const Tensor& x_hat, double omega,
                   const FeatureExtractor* features, DistortionFamily pixel_family) {
  if (!features) throw ConfigError("loss_fwl: no feature extractor configured");
  if (!(omega >= 0.0 && omega <= 1.0)) throw ArgumentError("loss_fwl: omega must lie in [0, 1]");
  require_same_shape(x_o, x_j, "loss_fwl");
  ValueGrad pix = distortion_grad(x_o, x_hat, pixel_family);
  ValueGrad out;
  out.value = omega * pix.value;
  out.grad = std::move(pix.grad);
  out.grad *= omega;
  if (omega < 1.0) {
    ValueGrad feat = feature_mse(x_hat, x_j, *features);
    out.value += (1.0 - omega) * feat.value;
    feat.grad *= 1.0 - omega;
    out.grad += feat.grad;
  }
  return out;
}

ValueGrad routed_distortion(const LossConfig& cfg, const Tensor& x_o, const Tensor& x_j, const Tensor& x_hat) {
  switch (cfg.variant) {
    case LossVariant::baseline:
      return loss_baseline(x_o, x_hat, cfg.family);
    case LossVariant::pwl:
      return loss_pwl(x_j, x_hat, cfg.family);
    case LossVariant::iwl:
      return loss_iwl(x_o, x_j, x_hat, cfg.family, cfg.iwl_clamp);
    case LossVariant::fwl:
      return loss_fwl(x_o, x_j, x_hat, cfg.omega, cfg.feature_extractor.get(),
                      cfg.fwl_pixel_follows_family ? cfg.family : DistortionFamily::mse);
  }
  throw ConfigError("unknown loss variant");
}

double rd_loss(double rate_bpp, double distortion, double lambda) {
  if (!(lambda > 0.0)) throw ArgumentError("rd_loss: lambda must be positive");
  return rate_bpp + lambda * distortion;
}

FeatureStack extract_features(const Tensor& x, const FeatureExtractor& features) { return features.extract(x); }

}  // namespace jndlc
