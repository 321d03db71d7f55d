#pragma once

#include <array>

#include "jndlc/core/tensor.hpp"

namespace jndlc {

/// Multi-scale structural similarity with an 11x11 Gaussian window
/// (sigma 1.5), C1 = 0.01^2, C2 = 0.03^2 for unit dynamic range, and 2x2
/// average pooling between scales. Contrast-structure terms are taken at the
/// finer scales and full SSIM at the coarsest; each is clipped at zero, raised
/// to its scale weight, and the product is averaged over batch and channels.
struct MsssimOptions {
  int scales = 5;
  /// Drop coarse scales (renormalizing the remaining weights) when the image
  /// is too small for `scales`.
  bool auto_reduce = true;
};

inline constexpr std::array<double, 5> kMsssimWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Smallest side length supporting `scales` scales.
int msssim_min_size(int scales);
/// Scale count used for an h x w image; throws ArgumentError naming the
/// required minimum when the image is too small.
int msssim_effective_scales(int h, int w, const MsssimOptions& opts = {});

double msssim(const Tensor& a, const Tensor& b, const MsssimOptions& opts = {});
/// Also writes d msssim / d b into `grad_b` when non-null. The index is
/// symmetric, so the gradient w.r.t. a is msssim(b, a, &g).
double msssim(const Tensor& a, const Tensor& b, Tensor* grad_b, const MsssimOptions& opts = {});

}  // namespace jndlc
