#include "jndlc/codec/codec.hpp"

#include <bit>
#include <memory>

#include "jndlc/core/binary_io.hpp"
#include "jndlc/core/error.hpp"
#include "jndlc/core/rng.hpp"

namespace jndlc {

std::string to_string(Nonlinearity n) { return n == Nonlinearity::gdn ? "gdn" : "leaky_relu"; }

Nonlinearity parse_nonlinearity(const std::string& s) {
  if (s == "gdn") return Nonlinearity::gdn;
  if (s == "leaky_relu") return Nonlinearity::leaky_relu;
  throw ConfigError("unknown nonlinearity '" + s + "' (expected gdn or leaky_relu)");
}

int ArchDescriptor::stages() const { return std::countr_zero(static_cast<unsigned>(downsampling)); }

void ArchDescriptor::validate() const {
  if (downsampling != 4 && downsampling != 8 && downsampling != 16) {
    throw ConfigError("downsampling must be 4, 8 or 16, got " + std::to_string(downsampling));
  }
  if (hidden_channels <= 0 || latent_channels <= 0) throw ConfigError("channel counts must be positive");
  if (kernel <= 0 || kernel % 2 == 0) throw ConfigError("kernel must be odd and positive");
  if (!(entropy_init_scale > 0.0)) throw ConfigError("entropy_init_scale must be positive");
}

namespace {

std::unique_ptr<nn::Layer> make_nonlinearity(Nonlinearity kind, int channels, bool inverse) {
  if (kind == Nonlinearity::gdn) return std::make_unique<nn::Gdn>(channels, inverse);
  return std::make_unique<nn::LeakyRelu>(0.01);
}

}  // namespace

CodecParams CodecParams::create(const ArchDescriptor& arch, std::uint64_t seed) {
  arch.validate();
  CodecParams p;
  p.arch = arch;
  const int stages = arch.stages();
  const int pad = arch.kernel / 2;
  for (int i = 0; i < stages; ++i) {
    const int in = i == 0 ? 3 : arch.hidden_channels;
    const int out = i + 1 == stages ? arch.latent_channels : arch.hidden_channels;
    p.analysis.add(std::make_unique<nn::Conv2d>(in, out, arch.kernel, 2, pad));
    if (i + 1 < stages) p.analysis.add(make_nonlinearity(arch.nonlinearity, out, false));
  }
  for (int i = 0; i < stages; ++i) {
    const int in = i == 0 ? arch.latent_channels : arch.hidden_channels;
    const int out = i + 1 == stages ? 3 : arch.hidden_channels;
    p.synthesis.add(std::make_unique<nn::ConvTranspose2d>(in, out, arch.kernel, 2, pad, 1));
    if (i + 1 < stages) p.synthesis.add(make_nonlinearity(arch.nonlinearity, out, true));
  }
  nn::init_uniform_fan_in(p.analysis, derive_seed(seed, 1));
  nn::init_uniform_fan_in(p.synthesis, derive_seed(seed, 2));
  p.entropy = EntropyModel(arch.latent_channels, arch.entropy_filters, arch.entropy_init_scale,
                           derive_seed(seed, 3));
  return p;
}

std::vector<std::span<double>> CodecParams::parameter_blocks() {
  std::vector<std::span<double>> out;
  for (auto& p : analysis.parameters("analysis")) out.push_back(p.value->values());
  for (auto& p : synthesis.parameters("synthesis")) out.push_back(p.value->values());
  out.push_back(entropy.parameters());
  return out;
}

std::vector<std::span<const double>> CodecParams::parameter_blocks() const {
  std::vector<std::span<const double>> out;
  for (auto& p : analysis.parameters("analysis")) out.push_back(p.value->values());
  for (auto& p : synthesis.parameters("synthesis")) out.push_back(p.value->values());
  out.push_back(entropy.parameters());
  return out;
}

std::vector<std::span<double>> CodecParams::gradient_blocks() {
  std::vector<std::span<double>> out;
  for (auto* g : analysis.gradients()) out.push_back(g->values());
  for (auto* g : synthesis.gradients()) out.push_back(g->values());
  out.push_back(entropy.gradients());
  return out;
}

std::vector<std::string> CodecParams::parameter_names() const {
  std::vector<std::string> out;
  for (auto& p : analysis.parameters("analysis")) out.push_back(p.name);
  for (auto& p : synthesis.parameters("synthesis")) out.push_back(p.name);
  out.emplace_back("entropy");
  return out;
}

void CodecParams::zero_grad() {
  analysis.zero_grad();
  synthesis.zero_grad();
  entropy.zero_grad();
}

void CodecParams::project() {
  analysis.project();
  synthesis.project();
}

std::uint64_t CodecParams::hash() const {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(arch.hidden_channels));
  w.u32(static_cast<std::uint32_t>(arch.latent_channels));
  w.u32(static_cast<std::uint32_t>(arch.downsampling));
  w.u32(static_cast<std::uint32_t>(arch.kernel));
  w.str(to_string(arch.nonlinearity));
  for (int f : arch.entropy_filters) w.u32(static_cast<std::uint32_t>(f));
  w.f64(arch.entropy_init_scale);
  std::uint64_t h = fnv1a64(w.bytes());
  for (auto block : parameter_blocks()) h = fnv1a64(block, h);
  return h;
}

void require_divisible(const Shape& s, int factor) {
  if (s.h % factor != 0) {
    throw ShapeError("height " + std::to_string(s.h) + " is not divisible by downsampling factor " +
                     std::to_string(factor));
  }
  if (s.w % factor != 0) {
    throw ShapeError("width " + std::to_string(s.w) + " is not divisible by downsampling factor " +
                     std::to_string(factor));
  }
}

Tensor analyze(const Tensor& x, const CodecParams& params) {
  require_image(x, "analyze");
  require_divisible(x.shape(), params.arch.downsampling);
  return params.analysis.forward(x);
}

namespace {

void require_latent(const Tensor& y, const CodecParams& params) {
  if (y.shape().c != params.arch.latent_channels) {
    throw ShapeError("latent has " + std::to_string(y.shape().c) + " channels, codec expects " +
                     std::to_string(params.arch.latent_channels));
  }
}

}  // namespace

Tensor synthesize_unclamped(const Tensor& yhat, const CodecParams& params) {
  require_latent(yhat, params);
  return params.synthesis.forward(yhat);
}

Tensor synthesize(const QuantizedLatent& yhat, const CodecParams& params) {
  return clamp01(synthesize_unclamped(yhat.data, params));
}

ForwardRecord forward_train(const Tensor& x, CodecParams& params, std::uint64_t noise_seed) {
  require_image(x, "forward_train");
  require_divisible(x.shape(), params.arch.downsampling);
  ForwardRecord rec;
  rec.latent = params.analysis.forward(x, rec.analysis_acts);
  rec.quantized = quantize(rec.latent, QuantMode::train_noise, noise_seed);
  rec.reconstruction = params.synthesis.forward(rec.quantized.data, rec.synthesis_acts);
  return rec;
}

void backward_train(const ForwardRecord& rec, const Tensor& grad_reconstruction, const Tensor& grad_latent_rate,
                    CodecParams& params) {
  Tensor g_latent = params.synthesis.backward(rec.synthesis_acts, grad_reconstruction, true);
  g_latent += grad_latent_rate;
  params.analysis.backward(rec.analysis_acts, g_latent, true);
}

namespace {

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

Tensor reflect_pad(const Tensor& x, int factor) {
  const Shape& s = x.shape();
  const int h = (s.h + factor - 1) / factor * factor;
  const int w = (s.w + factor - 1) / factor * factor;
  if (h == s.h && w == s.w) return x;
  Tensor out(Shape{s.n, s.c, h, w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < h; ++y) {
        for (int xx = 0; xx < w; ++xx) {
          out.at(n, c, y, xx) = x.at(n, c, reflect_index(y, s.h), reflect_index(xx, s.w));
        }
      }
    }
  }
  return out;
}

Tensor crop(const Tensor& x, int h, int w) {
  const Shape& s = x.shape();
  if (h > s.h || w > s.w) throw ShapeError("crop larger than tensor " + s.str());
  if (h == s.h && w == s.w) return x;
  Tensor out(Shape{s.n, s.c, h, w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < h; ++y) {
        for (int xx = 0; xx < w; ++xx) out.at(n, c, y, xx) = x.at(n, c, y, xx);
      }
    }
  }
  return out;
}

}  // namespace jndlc
