#include "jndlc/codec/quantizer.hpp"

#include <cmath>
#include <numbers>

#include "jndlc/core/error.hpp"
#include "jndlc/core/rng.hpp"

namespace jndlc {

QuantizedLatent quantize(const Tensor& y, QuantMode mode, std::uint64_t seed) {
  if (!y.all_finite()) throw NumericError("quantize: latent contains non-finite values");
  QuantizedLatent out{y, mode};
  if (mode == QuantMode::infer_round) {
    for (auto& v : out.data.values()) v = std::nearbyint(v);
  } else {
    Rng rng(seed);
    for (auto& v : out.data.values()) v += rng.uniform() - 0.5;
  }
  return out;
}

namespace {

void require_pixels(std::int64_t pixel_count) {
  if (pixel_count <= 0) throw ArgumentError("pixel_count must be positive, got " + std::to_string(pixel_count));
}

}  // namespace

Tensor latent_likelihood(const QuantizedLatent& yhat, const CumulativeModel& em) {
  if (!yhat.data.all_finite()) throw NumericError("latent_likelihood: non-finite latent");
  return em.likelihood(yhat.data);
}

double rate_bpp_from_likelihoods(const Tensor& likelihoods, std::int64_t pixel_count) {
  require_pixels(pixel_count);
  double bits = 0.0;
  for (double p : likelihoods.values()) bits -= std::log2(p);
  return bits / static_cast<double>(pixel_count);
}

double estimate_rate_bpp(const QuantizedLatent& yhat, const CumulativeModel& em, std::int64_t pixel_count) {
  require_pixels(pixel_count);
  return rate_bpp_from_likelihoods(em.likelihood(yhat.data), pixel_count);
}

RateWithGrad estimate_rate_bpp_backward(const QuantizedLatent& yhat, EntropyModel& em, std::int64_t pixel_count) {
  require_pixels(pixel_count);
  const Tensor p = em.likelihood(yhat.data);
  RateWithGrad out;
  out.bpp = rate_bpp_from_likelihoods(p, pixel_count);
  // d/dp of -log2(p) / pixels
  const double k = -1.0 / (std::numbers::ln2 * static_cast<double>(pixel_count));
  Tensor grad_p(p.shape());
  for (std::size_t i = 0; i < p.size(); ++i) grad_p[i] = k / p[i];
  out.grad_latent = em.likelihood_backward(yhat.data, grad_p);
  return out;
}

}  // namespace jndlc
