#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "jndlc/losses/distortion.hpp"
#include "jndlc/losses/features.hpp"

namespace jndlc {

enum class LossVariant { baseline, pwl, iwl, fwl };

std::string to_string(LossVariant v);
LossVariant parse_variant(const std::string& s);

/// Selects the distortion routed into the rate-distortion objective.
struct LossConfig {
  LossVariant variant = LossVariant::baseline;
  DistortionFamily family = DistortionFamily::mse;
  double lambda = 0.0067;
  /// FWL pixel/feature balance.
  double omega = 0.5;
  /// Optional max(0, .) on the IWL distortion.
  bool iwl_clamp = false;
  /// FWL pixel term uses `family` instead of MSE.
  bool fwl_pixel_follows_family = false;
  std::string feature_extractor_id;
  std::shared_ptr<const FeatureExtractor> feature_extractor;

  /// Throws ConfigError on lambda <= 0, omega outside [0, 1], an FWL config
  /// without an extractor, or a non-FWL config that references one.
  void validate() const;

  /// Multiplier applied to D inside the rate-distortion objective so the
  /// published lambda grids keep their meaning: MSE is measured on the
  /// 0..255 scale (x 255^2); 1 - MS-SSIM is used as is.
  double rd_distortion_scale() const;

  /// Plain-text `key = value` form (variant, family, lambda, omega,
  /// iwl_clamp, fwl_pixel_follows_family, feature_extractor_id).
  std::string to_text() const;
  /// Parses to_text() output (unknown keys rejected) and resolves the
  /// feature extractor.
  static LossConfig from_text(std::string_view text);
  /// Applies one key/value pair; returns false for keys it does not own.
  bool set(const std::string& key, const std::string& value);
  /// Loads the extractor named by feature_extractor_id if not yet loaded.
  void resolve_extractor();
};

/// Named lambda grids: "paper-mse" and "paper-msssim".
std::vector<double> lambda_preset(const std::string& name);

}  // namespace jndlc
