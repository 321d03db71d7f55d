#pragma once

#include "jndlc/losses/distortion.hpp"
#include "jndlc/losses/features.hpp"
#include "jndlc/losses/loss_config.hpp"

namespace jndlc {

// Every loss returns its value and the gradient w.r.t. x_hat. Originals and
// JND-quality images are data: no gradient flows to them.

/// d(x_o, x_hat).
ValueGrad loss_baseline(const Tensor& x_o, const Tensor& x_hat, DistortionFamily family);

/// d(x_j, x_hat); the original is deliberately not an argument.
ValueGrad loss_pwl(const Tensor& x_j, const Tensor& x_hat, DistortionFamily family);

/// d(x_o, x_hat) - d(x_o, x_j), optionally clamped at zero. The subtrahend is
/// constant in x_hat, so the unclamped gradient equals the baseline gradient.
ValueGrad loss_iwl(const Tensor& x_o, const Tensor& x_j, const Tensor& x_hat, DistortionFamily family,
                   bool clamp = false);

/// Mean over taps of the per-tap MSE between feature maps, plus its gradient
/// w.r.t. a.
ValueGrad feature_mse(const Tensor& a, const Tensor& b, const FeatureExtractor& features);

/// omega * d_pix(x_o, x_hat) + (1 - omega) * feature_mse(x_hat, x_j), with
/// d_pix = MSE unless `pixel_family` says otherwise.
ValueGrad loss_fwl(const Tensor& x_o, const Tensor& x_j, const Tensor& x_hat, double omega,
                   const FeatureExtractor* features, DistortionFamily pixel_family = DistortionFamily::mse);

/// Dispatches on cfg.variant with the configured family and options.
ValueGrad routed_distortion(const LossConfig& cfg, const Tensor& x_o, const Tensor& x_j, const Tensor& x_hat);

/// rate + lambda * D.
double rd_loss(double rate_bpp, double distortion, double lambda);

FeatureStack extract_features(const Tensor& x, const FeatureExtractor& features);

}  // namespace jndlc
