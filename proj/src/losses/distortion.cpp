#include "jndlc/losses/distortion.hpp"

#include "jndlc/core/error.hpp"

namespace jndlc {

std::string to_string(DistortionFamily f) { return f == DistortionFamily::mse ? "mse" : "msssim"; }

DistortionFamily parse_family(const std::string& s) {
  if (s == "mse") return DistortionFamily::mse;
  if (s == "msssim" || s == "ms-ssim" || s == "one_minus_msssim") return DistortionFamily::one_minus_msssim;
  throw ConfigError("unknown distortion family '" + s + "' (expected mse or msssim)");
}

double mse(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mse");
  if (a.empty()) throw ShapeError("mse of empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double distortion(const Tensor& a, const Tensor& b, DistortionFamily family, const MsssimOptions& opts) {
  if (family == DistortionFamily::mse) return mse(a, b);
  return 1.0 - msssim(a, b, opts);
}

ValueGrad distortion_grad(const Tensor& a, const Tensor& b, DistortionFamily family, const MsssimOptions& opts) {
  ValueGrad out;
  if (family == DistortionFamily::mse) {
    out.value = mse(a, b);
    out.grad = Tensor(b.shape());
    const double k = 2.0 / static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out.grad[i] = k * (b[i] - a[i]);
    return out;
  }
  out.value = 1.0 - msssim(a, b, &out.grad, opts);
  out.grad *= -1.0;
  return out;
}

}  // namespace jndlc
