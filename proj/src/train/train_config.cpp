#include "jndlc/train/train_config.hpp"

#include <sstream>

#include "jndlc/core/error.hpp"
#include "jndlc/core/kv_config.hpp"

namespace jndlc {

void TrainConfig::validate() const {
  loss.validate();
  arch.validate();
  if (lambdas.empty()) throw ConfigError("lambda grid is empty");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0)) throw ConfigError("lambdas must be positive");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) throw ConfigError("lambdas must be strictly increasing");
  }
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
  if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (!(grad_clip >= 0.0)) throw ConfigError("grad_clip must be non-negative");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (smoothing_window < 1) throw ConfigError("smoothing_window must be >= 1");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.eps > 0.0)) {
    throw ConfigError("invalid Adam moments");
  }
  patch.validate(arch.downsampling);
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << loss.to_text();
  os << "lambdas = ";
  for (std::size_t i = 0; i < lambdas.size(); ++i) os << (i ? "," : "") << format_double(lambdas[i]);
  os << '\n';
  os << "epochs = " << epochs << '\n';
  os << "batch_size = " << batch_size << '\n';
  os << "learning_rate = " << format_double(learning_rate) << '\n';
  os << "seed = " << seed << '\n';
  os << "max_steps = " << max_steps << '\n';
  os << "patch_size = " << patch.size << '\n';
  os << "patches_per_image = " << patch.patches_per_image << '\n';
  os << "patch_seed = " << patch.seed << '\n';
  os << "hidden_channels = " << arch.hidden_channels << '\n';
  os << "latent_channels = " << arch.latent_channels << '\n';
  os << "downsampling = " << arch.downsampling << '\n';
  os << "kernel = " << arch.kernel << '\n';
  os << "nonlinearity = " << to_string(arch.nonlinearity) << '\n';
  os << "entropy_init_scale = " << format_double(arch.entropy_init_scale) << '\n';
  os << "adam_beta1 = " << format_double(adam.beta1) << '\n';
  os << "adam_beta2 = " << format_double(adam.beta2) << '\n';
  os << "adam_eps = " << format_double(adam.eps) << '\n';
  os << "grad_clip = " << format_double(grad_clip) << '\n';
  os << "warm_start = " << (warm_start ? "true" : "false") << '\n';
  os << "checkpoint_every = " << checkpoint_every << '\n';
  os << "smoothing_window = " << smoothing_window << '\n';
  return os.str();
}

namespace {

std::vector<double> parse_lambdas(const std::string& key, const std::string& v) {
  if (v.rfind("paper-", 0) == 0) return lambda_preset(v);
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  const long long x = parse_int(key, v);
  if (x < -(1LL << 31) || x > (1LL << 31) - 1) throw ConfigError("key '" + key + "' out of range");
  return static_cast<int>(x);
}

}  // namespace

bool TrainConfig::set(const std::string& key, const std::string& value) {
  if (loss.set(key, value)) return true;
  if (key == "lambdas") {
    lambdas = parse_lambdas(key, value);
  } else if (key == "epochs") {
    epochs = to_int(key, value);
  } else if (key == "batch_size") {
    batch_size = to_int(key, value);
  } else if (key == "learning_rate") {
    learning_rate = parse_double(key, value);
  } else if (key == "seed") {
    seed = parse_u64(key, value);
  } else if (key == "max_steps") {
    max_steps = to_int(key, value);
  } else if (key == "patch_size") {
    patch.size = to_int(key, value);
  } else if (key == "patches_per_image") {
    patch.patches_per_image = to_int(key, value);
  } else if (key == "patch_seed") {
    patch.seed = parse_u64(key, value);
  } else if (key == "hidden_channels") {
    arch.hidden_channels = to_int(key, value);
  } else if (key == "latent_channels") {
    arch.latent_channels = to_int(key, value);
  } else if (key == "downsampling") {
    arch.downsampling = to_int(key, value);
  } else if (key == "kernel") {
    arch.kernel = to_int(key, value);
  } else if (key == "nonlinearity") {
    try {
      arch.nonlinearity = parse_nonlinearity(value);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "entropy_init_scale") {
    arch.entropy_init_scale = parse_double(key, value);
  } else if (key == "adam_beta1") {
    adam.beta1 = parse_double(key, value);
  } else if (key == "adam_beta2") {
    adam.beta2 = parse_double(key, value);
  } else if (key == "adam_eps") {
    adam.eps = parse_double(key, value);
  } else if (key == "grad_clip") {
    grad_clip = parse_double(key, value);
  } else if (key == "warm_start") {
    warm_start = parse_bool(key, value);
  } else if (key == "checkpoint_every") {
    checkpoint_every = to_int(key, value);
  } else if (key == "smoothing_window") {
    smoothing_window = to_int(key, value);
  } else {
    return false;
  }
  return true;
}

TrainConfig TrainConfig::from_text(std::string_view text) {
  TrainConfig cfg;
  for (const auto& kv : parse_key_values(text)) {
    if (!cfg.set(kv.key, kv.value)) {
      throw ConfigError("line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
    }
  }
  cfg.loss.resolve_extractor();
  return cfg;
}

TrainConfig TrainConfig::preset(const std::string& name) {
  TrainConfig cfg;
  if (name == "desk") {
    cfg.lambdas = {0.0018, 0.0067, 0.0483};
    cfg.epochs = 1;
    cfg.batch_size = 8;
    cfg.learning_rate = 1e-3;
    cfg.patch = {64, 1, 0};
    cfg.arch.hidden_channels = 32;
    cfg.arch.latent_channels = 64;
    cfg.arch.downsampling = 8;
    cfg.arch.entropy_init_scale = 1.0;
    return cfg;
  }
  if (name == "paper") {
    cfg.lambdas = lambda_preset("paper-mse");
    cfg.epochs = 100;
    cfg.batch_size = 16;
    cfg.learning_rate = 1e-4;
    cfg.patch = {256, 1, 0};
    cfg.arch.hidden_channels = 128;
    cfg.arch.latent_channels = 192;
    cfg.arch.downsampling = 16;
    return cfg;
  }
  throw ConfigError("unknown training preset '" + name + "' (expected desk or paper)");
}

}  // namespace jndlc
