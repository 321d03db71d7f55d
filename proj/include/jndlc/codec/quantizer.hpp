#pragma once

#include <cstdint>

#include "jndlc/codec/entropy_model.hpp"
#include "jndlc/core/tensor.hpp"

namespace jndlc {

enum class QuantMode {
  train_noise,  // y + u, u ~ U[-1/2, 1/2)
  infer_round,  // nearest integer, ties to even
};

struct QuantizedLatent {
  Tensor data;
  QuantMode mode = QuantMode::infer_round;
};

/// Throws NumericError on non-finite input. In train_noise mode the
/// backward pass is the identity.
QuantizedLatent quantize(const Tensor& y, QuantMode mode, std::uint64_t seed = 0);

/// Element-wise discretized likelihood p = c(v + 1/2) - c(v - 1/2), floored.
Tensor latent_likelihood(const QuantizedLatent& yhat, const CumulativeModel& em);

/// Rate in bits per pixel: (-sum log2 p) / pixel_count.
double estimate_rate_bpp(const QuantizedLatent& yhat, const CumulativeModel& em, std::int64_t pixel_count);

/// Same as estimate_rate_bpp for precomputed likelihoods.
double rate_bpp_from_likelihoods(const Tensor& likelihoods, std::int64_t pixel_count);

struct RateWithGrad {
  double bpp = 0.0;
  Tensor grad_latent;  // d bpp / d yhat
};

/// Rate plus its gradient w.r.t. the latent; d bpp / d(em params) is
/// accumulated into em.gradients().
RateWithGrad estimate_rate_bpp_backward(const QuantizedLatent& yhat, EntropyModel& em, std::int64_t pixel_count);

}  // namespace jndlc
