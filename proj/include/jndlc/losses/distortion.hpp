#pragma once

#include <string>

#include "jndlc/core/tensor.hpp"
#include "jndlc/losses/msssim.hpp"

namespace jndlc {

enum class DistortionFamily { mse, one_minus_msssim };

std::string to_string(DistortionFamily f);
DistortionFamily parse_family(const std::string& s);

/// A scalar and its gradient w.r.t. the reconstruction argument.
struct ValueGrad {
  double value = 0.0;
  Tensor grad;
};

double mse(const Tensor& a, const Tensor& b);

/// d(a, b): mean squared error, or 1 - MS-SSIM(a, b).
double distortion(const Tensor& a, const Tensor& b, DistortionFamily family, const MsssimOptions& opts = {});
/// Value and d/d b. Both families are symmetric, so the gradient w.r.t. a is
/// distortion_grad(b, a, family).grad.
ValueGrad distortion_grad(const Tensor& a, const Tensor& b, DistortionFamily family, const MsssimOptions& opts = {});

}  // namespace jndlc
