#include "jndlc/losses/msssim.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "jndlc/core/error.hpp"

namespace jndlc {
namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

struct Plane {
  int h = 0;
  int w = 0;
  std::vector<double> v;

  Plane() = default;
  Plane(int hh, int ww) : h(hh), w(ww), v(static_cast<std::size_t>(hh) * ww, 0.0) {}
  double& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

const std::array<double, kSsimWindow>& gaussian_window() {
  static const auto window = [] {
    std::array<double, kSsimWindow> g{};
    double total = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
      const double d = i - kSsimWindow / 2;
      g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
      total += g[i];
    }
    for (auto& x : g) x /= total;
    return g;
  }();
  return window;
}

// Separable "valid" Gaussian filtering: (h, w) -> (h - 10, w - 10).
Plane blur(const Plane& in) {
  const auto& g = gaussian_window();
  const int ow = in.w - kSsimWindow + 1;
  const int oh = in.h - kSsimWindow + 1;
  Plane tmp(in.h, ow);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += g[k] * in.at(y, x + k);
      tmp.at(y, x) = acc;
    }
  }
  Plane out(oh, ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += g[k] * tmp.at(y + k, x);
      out.at(y, x) = acc;
    }
  }
  return out;
}

// Adjoint of blur: (h - 10, w - 10) -> (h, w).
Plane blur_adjoint(const Plane& in, int h, int w) {
  const auto& g = gaussian_window();
  Plane tmp(h, in.w);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      const double v = in.at(y, x);
      for (int k = 0; k < kSsimWindow; ++k) tmp.at(y + k, x) += g[k] * v;
    }
  }
  Plane out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      const double v = tmp.at(y, x);
      for (int k = 0; k < kSsimWindow; ++k) out.at(y, x + k) += g[k] * v;
    }
  }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out(a.h, a.w);
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

Plane pool(const Plane& in) {
  Plane out(in.h / 2, in.w / 2);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      out.at(y, x) = 0.25 * (in.at(2 * y, 2 * x) + in.at(2 * y, 2 * x + 1) + in.at(2 * y + 1, 2 * x) +
                             in.at(2 * y + 1, 2 * x + 1));
    }
  }
  return out;
}

void pool_adjoint_add(const Plane& coarse, Plane& fine) {
  for (int y = 0; y < coarse.h; ++y) {
    for (int x = 0; x < coarse.w; ++x) {
      const double v = 0.25 * coarse.at(y, x);
      fine.at(2 * y, 2 * x) += v;
      fine.at(2 * y, 2 * x + 1) += v;
      fine.at(2 * y + 1, 2 * x) += v;
      fine.at(2 * y + 1, 2 * x + 1) += v;
    }
  }
}

struct ScaleStats {
  Plane mu_a, mu_b, var_a, var_b, cov;
};

ScaleStats statistics(const Plane& a, const Plane& b) {
  ScaleStats s;
  s.mu_a = blur(a);
  s.mu_b = blur(b);
  s.var_a = blur(product(a, a));
  s.var_b = blur(product(b, b));
  s.cov = blur(product(a, b));
  for (std::size_t i = 0; i < s.mu_a.v.size(); ++i) {
    const double ma = s.mu_a.v[i];
    const double mb = s.mu_b.v[i];
    s.var_a.v[i] -= ma * ma;
    s.var_b.v[i] -= mb * mb;
    s.cov.v[i] -= ma * mb;
  }
  return s;
}

// Mean contrast-structure (and, for the coarsest scale, full SSIM) of one plane pair.
void scale_means(const ScaleStats& s, bool last, double& cs_mean, double& ssim_mean) {
  double cs_acc = 0.0;
  double ssim_acc = 0.0;
  const std::size_t n = s.mu_a.v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double cs = (2.0 * s.cov.v[i] + kC2) / (s.var_a.v[i] + s.var_b.v[i] + kC2);
    cs_acc += cs;
    if (last) {
      const double ma = s.mu_a.v[i];
      const double mb = s.mu_b.v[i];
      const double l = (2.0 * ma * mb + kC1) / (ma * ma + mb * mb + kC1);
      ssim_acc += l * cs;
    }
  }
  cs_mean = cs_acc / static_cast<double>(n);
  ssim_mean = ssim_acc / static_cast<double>(n);
}

// d(coef * mean value)/d b at this scale, where the value is the contrast-
// structure mean (or full SSIM mean on the last scale).
Plane scale_grad(const Plane& a, const Plane& b, const ScaleStats& s, bool last, double coef) {
  const std::size_t n = s.mu_a.v.size();
  const double k = coef / static_cast<double>(n);
  Plane g_mu(s.mu_a.h, s.mu_a.w);
  Plane g_ebb(s.mu_a.h, s.mu_a.w);
  Plane g_eab(s.mu_a.h, s.mu_a.w);
  for (std::size_t i = 0; i < n; ++i) {
    const double ma = s.mu_a.v[i];
    const double mb = s.mu_b.v[i];
    const double num = 2.0 * s.cov.v[i] + kC2;
    const double den = s.var_a.v[i] + s.var_b.v[i] + kC2;
    const double cs = num / den;
    double d_cov = 2.0 / den;
    double d_varb = -num / (den * den);
    double d_mub = 0.0;
    if (last) {
      const double ln = 2.0 * ma * mb + kC1;
      const double ld = ma * ma + mb * mb + kC1;
      const double l = ln / ld;
      d_mub = cs * (2.0 * ma * ld - ln * 2.0 * mb) / (ld * ld);
      d_cov *= l;
      d_varb *= l;
    }
    d_cov *= k;
    d_varb *= k;
    d_mub *= k;
    // var_b = E[b^2] - mu_b^2, cov = E[ab] - mu_a mu_b
    g_mu.v[i] = d_mub - 2.0 * mb * d_varb - ma * d_cov;
    g_ebb.v[i] = d_varb;
    g_eab.v[i] = d_cov;
  }
  Plane out = blur_adjoint(g_mu, b.h, b.w);
  const Plane t_bb = blur_adjoint(g_ebb, b.h, b.w);
  const Plane t_ab = blur_adjoint(g_eab, b.h, b.w);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += 2.0 * b.v[i] * t_bb.v[i] + a.v[i] * t_ab.v[i];
  return out;
}

}  // namespace

int msssim_min_size(int scales) { return kSsimWindow << (scales - 1); }

int msssim_effective_scales(int h, int w, const MsssimOptions& opts) {
  if (opts.scales < 1 || opts.scales > static_cast<int>(kMsssimWeights.size())) {
    throw ArgumentError("MS-SSIM scale count must be in [1, 5], got " + std::to_string(opts.scales));
  }
  const int side = std::min(h, w);
  if (!opts.auto_reduce) {
    if (side < msssim_min_size(opts.scales)) {
      throw ArgumentError("MS-SSIM with " + std::to_string(opts.scales) + " scales needs images of at least " +
                          std::to_string(msssim_min_size(opts.scales)) + " pixels per side, got " +
                          std::to_string(side));
    }
    return opts.scales;
  }
  if (side < kSsimWindow) {
    throw ArgumentError("MS-SSIM needs images of at least " + std::to_string(kSsimWindow) +
                        " pixels per side, got " + std::to_string(side));
  }
  int m = opts.scales;
  while (m > 1 && side < msssim_min_size(m)) --m;
  return m;
}

double msssim(const Tensor& a, const Tensor& b, const MsssimOptions& opts) { return msssim(a, b, nullptr, opts); }

double msssim(const Tensor& a, const Tensor& b, Tensor* grad_b, const MsssimOptions& opts) {
  require_same_shape(a, b, "msssim");
  const Shape& sh = a.shape();
  const int scales = msssim_effective_scales(sh.h, sh.w, opts);
  double weight_total = 0.0;
  for (int j = 0; j < scales; ++j) weight_total += kMsssimWeights[j];
  // The full set is used as published; reduced sets are renormalized.
  if (scales == static_cast<int>(kMsssimWeights.size())) weight_total = 1.0;
  std::array<double, 5> weights{};
  for (int j = 0; j < scales; ++j) weights[j] = kMsssimWeights[j] / weight_total;

  if (grad_b) *grad_b = Tensor(sh);
  const double planes = static_cast<double>(sh.n) * sh.c;
  double total = 0.0;
  std::vector<Plane> pa(scales), pb(scales);
  std::vector<ScaleStats> stats(scales);
  for (int n = 0; n < sh.n; ++n) {
    for (int c = 0; c < sh.c; ++c) {
      pa[0] = Plane(sh.h, sh.w);
      pb[0] = Plane(sh.h, sh.w);
      std::copy_n(a.plane(n, c), sh.plane(), pa[0].v.begin());
      std::copy_n(b.plane(n, c), sh.plane(), pb[0].v.begin());
      for (int j = 1; j < scales; ++j) {
        pa[j] = pool(pa[j - 1]);
        pb[j] = pool(pb[j - 1]);
      }
      std::array<double, 5> value{};
      for (int j = 0; j < scales; ++j) {
        stats[j] = statistics(pa[j], pb[j]);
        const bool last = j + 1 == scales;
        double cs = 0.0;
        double ss = 0.0;
        scale_means(stats[j], last, cs, ss);
        value[j] = std::max(last ? ss : cs, 0.0);
      }
      double prod = 1.0;
      for (int j = 0; j < scales; ++j) prod *= std::pow(value[j], weights[j]);
      total += prod;

      if (!grad_b) continue;
      Plane carry;
      for (int j = scales - 1; j >= 0; --j) {
        const bool last = j + 1 == scales;
        const double coef = value[j] > 0.0 ? weights[j] * prod / value[j] / planes : 0.0;
        Plane g = coef != 0.0 ? scale_grad(pa[j], pb[j], stats[j], last, coef) : Plane(pb[j].h, pb[j].w);
        if (!carry.v.empty()) pool_adjoint_add(carry, g);
        carry = std::move(g);
      }
      std::copy(carry.v.begin(), carry.v.end(), grad_b->plane(n, c));
    }
  }
  return total / planes;
}

}  // namespace jndlc
