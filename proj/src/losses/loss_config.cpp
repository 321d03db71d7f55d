#include "jndlc/losses/loss_config.hpp"

#include <sstream>
#include <vector>

#include "jndlc/core/error.hpp"
#include "jndlc/core/kv_config.hpp"

namespace jndlc {

std::string to_string(LossVariant v) {
  switch (v) {
    case LossVariant::baseline:
      return "baseline";
    case LossVariant::pwl:
      return "pwl";
    case LossVariant::iwl:
      return "iwl";
    case LossVariant::fwl:
      return "fwl";
  }
  return "baseline";
}

LossVariant parse_variant(const std::string& s) {
  if (s == "baseline") return LossVariant::baseline;
  if (s == "pwl") return LossVariant::pwl;
  if (s == "iwl") return LossVariant::iwl;
  if (s == "fwl") return LossVariant::fwl;
  throw ConfigError("unknown loss variant '" + s + "' (expected baseline, pwl, iwl or fwl)");
}

void LossConfig::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive, got " + std::to_string(lambda));
  if (!(omega >= 0.0 && omega <= 1.0)) throw ConfigError("omega must lie in [0, 1], got " + std::to_string(omega));
  if (variant == LossVariant::fwl) {
    if (!feature_extractor) throw ConfigError("fwl requires a feature extractor");
  } else if (feature_extractor || !feature_extractor_id.empty()) {
    throw ConfigError("only fwl may reference a feature extractor (variant is " + to_string(variant) + ")");
  }
}

double LossConfig::rd_distortion_scale() const { return family == DistortionFamily::mse ? 255.0 * 255.0 : 1.0; }

std::string LossConfig::to_text() const {
  std::ostringstream os;
  os << "variant = " << to_string(variant) << '\n';
  os << "family = " << to_string(family) << '\n';
  os << "lambda = " << format_double(lambda) << '\n';
  os << "omega = " << format_double(omega) << '\n';
  os << "iwl_clamp = " << (iwl_clamp ? "true" : "false") << '\n';
  os << "fwl_pixel_follows_family = " << (fwl_pixel_follows_family ? "true" : "false") << '\n';
  os << "feature_extractor_id = " << feature_extractor_id << '\n';
  return os.str();
}

bool LossConfig::set(const std::string& key, const std::string& value) {
  if (key == "variant") {
    variant = parse_variant(value);
  } else if (key == "family") {
    family = parse_family(value);
  } else if (key == "lambda") {
    lambda = parse_double(key, value);
  } else if (key == "omega") {
    omega = parse_double(key, value);
  } else if (key == "iwl_clamp") {
    iwl_clamp = parse_bool(key, value);
  } else if (key == "fwl_pixel_follows_family") {
    fwl_pixel_follows_family = parse_bool(key, value);
  } else if (key == "feature_extractor_id") {
    feature_extractor_id = value;
    feature_extractor.reset();
  } else {
    return false;
  }
  return true;
}

void LossConfig::resolve_extractor() {
  if (!feature_extractor && !feature_extractor_id.empty()) {
    feature_extractor = make_feature_extractor(feature_extractor_id);
  }
}

LossConfig LossConfig::from_text(std::string_view text) {
  LossConfig cfg;
  for (const auto& kv : parse_key_values(text)) {
    if (!cfg.set(kv.key, kv.value)) {
      throw ConfigError("line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
    }
  }
  cfg.resolve_extractor();
  cfg.validate();
  return cfg;
}

std::vector<double> lambda_preset(const std::string& name) {
  if (name == "paper-mse") return {0.0018, 0.0035, 0.0067, 0.0130, 0.0250, 0.0483};
  if (name == "paper-msssim") return {2.40, 4.58, 8.73, 16.64, 31.73, 60.50};
  throw ConfigError("unknown lambda preset '" + name + "' (expected paper-mse or paper-msssim)");
}

}  // namespace jndlc
