#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jndlc/codec/entropy_model.hpp"
#include "jndlc/codec/quantizer.hpp"
#include "jndlc/core/nn.hpp"
#include "jndlc/core/tensor.hpp"

namespace jndlc {

enum class Nonlinearity { gdn, leaky_relu };

std::string to_string(Nonlinearity n);
Nonlinearity parse_nonlinearity(const std::string& s);

/// Shape of the analysis/synthesis pair. The synthesis transform mirrors the
/// analysis one, so a single descriptor covers both.
struct ArchDescriptor {
  int hidden_channels = 64;
  int latent_channels = 64;
  int downsampling = 8;  // s: one stride-2 stage per factor of two
  int kernel = 5;
  Nonlinearity nonlinearity = Nonlinearity::gdn;
  std::vector<int> entropy_filters{3, 3, 3};
  double entropy_init_scale = 10.0;

  int stages() const;
  void validate() const;
  bool operator==(const ArchDescriptor&) const = default;
};

/// Learnable state of the codec: analysis weights, synthesis weights and the
/// factorized entropy model.
struct CodecParams {
  ArchDescriptor arch;
  nn::Sequential analysis;
  nn::Sequential synthesis;
  EntropyModel entropy;

  static CodecParams create(const ArchDescriptor& arch, std::uint64_t seed);

  /// Flat, ordered view of every learnable array (analysis, synthesis, entropy).
  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::span<const double>> parameter_blocks() const;
  std::vector<std::span<double>> gradient_blocks();
  std::vector<std::string> parameter_names() const;
  void zero_grad();
  /// Re-imposes layer constraints after an optimizer step.
  void project();
  /// FNV-1a over the descriptor and all parameter bits.
  std::uint64_t hash() const;
};

/// Throws ShapeError naming the offending dimension unless height and width
/// are multiples of `factor`.
void require_divisible(const Shape& s, int factor);

/// Eq. y = g_a(x).
Tensor analyze(const Tensor& x, const CodecParams& params);
/// x_hat = g_s(y_hat) clamped to [0, 1].
Tensor synthesize(const QuantizedLatent& yhat, const CodecParams& params);
/// Synthesis output before the clamp (what training losses see).
Tensor synthesize_unclamped(const Tensor& yhat, const CodecParams& params);

/// Recorded forward pass for one training step.
struct ForwardRecord {
  std::vector<Tensor> analysis_acts;
  std::vector<Tensor> synthesis_acts;
  Tensor latent;
  QuantizedLatent quantized;
  Tensor reconstruction;  // unclamped
};

ForwardRecord forward_train(const Tensor& x, CodecParams& params, std::uint64_t noise_seed);

/// Backpropagates d loss / d reconstruction and d loss / d quantized latent
/// (the rate path) into the transform gradients. The quantizer contributes an
/// identity Jacobian.
void backward_train(const ForwardRecord& rec, const Tensor& grad_reconstruction, const Tensor& grad_latent_rate,
                    CodecParams& params);

/// Pads bottom/right by mirror reflection so both dims are multiples of `factor`.
Tensor reflect_pad(const Tensor& x, int factor);
/// Top-left crop to (h, w).
Tensor crop(const Tensor& x, int h, int w);

}  // namespace jndlc
