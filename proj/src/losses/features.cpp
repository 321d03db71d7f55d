#include "jndlc/losses/features.hpp"

#include <cmath>

#include "jndlc/core/binary_io.hpp"
#include "jndlc/core/error.hpp"
#include "jndlc/core/rng.hpp"

namespace jndlc {
namespace {

constexpr std::uint32_t kFeatureMagic = 0x46444e4a;  // "JNDF"
constexpr std::uint32_t kFeatureVersion = 1;

}  // namespace

FeatureExtractor::FeatureExtractor() {
  net_.add(std::make_unique<nn::Conv2d>(3, 16, 3, 1, 1));
  net_.add(std::make_unique<nn::LeakyRelu>(0.0));
  net_.add(std::make_unique<nn::Conv2d>(16, 16, 3, 1, 1));
  net_.add(std::make_unique<nn::LeakyRelu>(0.0));
  net_.add(std::make_unique<nn::AvgPool2>());
  net_.add(std::make_unique<nn::Conv2d>(16, 32, 3, 1, 1));
  net_.add(std::make_unique<nn::LeakyRelu>(0.0));
  net_.add(std::make_unique<nn::AvgPool2>());
  net_.add(std::make_unique<nn::Conv2d>(32, 32, 3, 1, 1));
  net_.add(std::make_unique<nn::LeakyRelu>(0.0));
  taps_ = {3, 6, 9};
}

FeatureExtractor FeatureExtractor::seeded(std::uint64_t seed) {
  FeatureExtractor f;
  Rng rng(seed);
  for (auto& p : f.net_.parameters("features")) {
    const Shape& s = p.value->shape();
    if (s.n == 1 && s.h == 1 && s.w == 1) {
      p.value->fill(0.0);  // bias
      continue;
    }
    const double std_dev = std::sqrt(2.0 / static_cast<double>(s.c * s.h * s.w));
    for (auto& v : p.value->values()) v = std_dev * rng.normal();
  }
  f.provenance_ = FeatureProvenance::seeded_random;
  f.id_ = "seeded_random:" + std::to_string(seed);
  return f;
}

FeatureExtractor FeatureExtractor::load(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  ByteReader r(bytes);
  if (r.u32() != kFeatureMagic) throw FormatError(path.string() + ": not a jndlc feature weight file");
  if (r.u32() != kFeatureVersion) throw FormatError(path.string() + ": unsupported feature weight version");
  FeatureExtractor f;
  for (auto& p : f.net_.parameters("features")) {
    if (r.u64() != p.value->size()) throw FormatError(path.string() + ": feature weight shape mismatch");
    for (auto& v : p.value->values()) v = r.f64();
  }
  if (r.remaining() != 0) throw FormatError(path.string() + ": trailing bytes in feature weight file");
  f.provenance_ = FeatureProvenance::pretrained;
  f.id_ = "pretrained:" + path.string();
  return f;
}

void FeatureExtractor::save(const std::filesystem::path& path) const {
  ByteWriter w;
  w.u32(kFeatureMagic);
  w.u32(kFeatureVersion);
  for (const auto& p : net_.parameters("features")) {
    w.u64(p.value->size());
    for (double v : p.value->values()) w.f64(v);
  }
  write_file_atomic(path, w.bytes());
}

FeatureStack FeatureExtractor::extract(const Tensor& x) const {
  Record r;
  return extract(x, r);
}

FeatureStack FeatureExtractor::extract(const Tensor& x, Record& record) const {
  require_image(x, "extract_features");
  Tensor centred = x;
  for (auto& v : centred.values()) v -= 0.5;
  net_.forward(centred, record.activations);
  FeatureStack out;
  out.reserve(taps_.size());
  for (std::size_t t : taps_) out.push_back(record.activations[t + 1]);
  return out;
}

Tensor FeatureExtractor::backward(const Record& record, const std::vector<Tensor>& tap_grads) const {
  if (tap_grads.size() != taps_.size()) throw ArgumentError("feature backward: one gradient per tap required");
  const auto& acts = record.activations;
  if (acts.size() != net_.size() + 1) throw ArgumentError("feature backward: activation record mismatch");
  Tensor g(acts.back().shape());
  for (std::size_t i = net_.size(); i-- > 0;) {
    for (std::size_t t = 0; t < taps_.size(); ++t) {
      if (taps_[t] == i) g += tap_grads[t];
    }
    g = net_.layer(i).backward(acts[i], g, {});
  }
  return g;
}

std::shared_ptr<const FeatureExtractor> make_feature_extractor(const std::string& id) {
  const auto colon = id.find(':');
  const std::string kind = id.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : id.substr(colon + 1);
  if (kind == "seeded_random") {
    std::uint64_t seed = 0;
    try {
      seed = arg.empty() ? 0 : std::stoull(arg);
    } catch (const std::exception&) {
      throw ConfigError("bad feature extractor seed in '" + id + "'");
    }
    return std::make_shared<const FeatureExtractor>(FeatureExtractor::seeded(seed));
  }
  if (kind == "pretrained") {
    if (arg.empty()) throw ConfigError("pretrained feature extractor needs a weight file path");
    return std::make_shared<const FeatureExtractor>(FeatureExtractor::load(arg));
  }
  throw ConfigError("unknown feature extractor id '" + id + "'");
}

}  // namespace jndlc
