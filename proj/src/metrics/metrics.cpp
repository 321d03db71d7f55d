#include "jndlc/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "jndlc/core/error.hpp"
#include "jndlc/core/log.hpp"
#include "jndlc/losses/distortion.hpp"
#include "jndlc/losses/msssim.hpp"
#include "jndlc/metrics/pchip.hpp"

namespace jndlc {

std::string to_string(QualityMetric m) { return m == QualityMetric::psnr ? "psnr" : "msssim"; }

QualityMetric parse_metric(const std::string& s) {
  if (s == "psnr") return QualityMetric::psnr;
  if (s == "msssim" || s == "ms-ssim") return QualityMetric::msssim;
  throw ArgumentError("unknown quality metric '" + s + "' (expected psnr or msssim)");
}

double psnr(const Tensor& a, const Tensor& b) {
  const double e = mse(a, b);
  if (e == 0.0) return kInfinitePsnr;
  return -10.0 * std::log10(e);
}

double msssim_metric(const Tensor& a, const Tensor& b) { return msssim(a, b); }

RDCurve::RDCurve(std::vector<RDPoint> points, std::string method_id, std::string dataset_id)
    : points_(std::move(points)), method_id_(std::move(method_id)), dataset_id_(std::move(dataset_id)) {
  std::sort(points_.begin(), points_.end(), [](const RDPoint& a, const RDPoint& b) { return a.bpp < b.bpp; });
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const RDPoint& p = points_[i];
    if (!(p.bpp >= 0.0) || !std::isfinite(p.bpp)) throw ArgumentError("RD point with invalid bpp");
    if (!(p.msssim >= 0.0 && p.msssim <= 1.0)) throw ArgumentError("RD point with msssim outside [0, 1]");
    if (i > 0 && !(p.bpp > points_[i - 1].bpp)) {
      throw ArgumentError("RD curve '" + method_id_ + "' has duplicate bpp " + std::to_string(p.bpp));
    }
    if (i > 0 && (p.psnr < points_[i - 1].psnr || p.msssim < points_[i - 1].msssim)) {
      warn("RD curve '" + method_id_ + "': quality decreases between bpp " + std::to_string(points_[i - 1].bpp) +
           " and " + std::to_string(p.bpp));
    }
  }
}

namespace {

struct LogRateCurve {
  std::vector<double> quality;
  std::vector<double> log_bpp;
};

// Finite (quality, log bpp) pairs ordered by quality; zero-rate points and
// sentinel qualities are dropped with a warning.
LogRateCurve log_rate_curve(const RDCurve& curve, QualityMetric metric) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : curve.points()) {
    const double q = p.quality(metric);
    if (!std::isfinite(q)) {
      warn("RD curve '" + curve.method_id() + "': excluding point with infinite " + to_string(metric));
      continue;
    }
    if (!(p.bpp > 0.0)) {
      warn("RD curve '" + curve.method_id() + "': excluding zero-rate point");
      continue;
    }
    pts.emplace_back(q, std::log(p.bpp));
  }
  std::sort(pts.begin(), pts.end());
  LogRateCurve out;
  for (const auto& [q, lr] : pts) {
    if (!out.quality.empty() && q == out.quality.back()) {
      warn("RD curve '" + curve.method_id() + "': dropping point with duplicate quality");
      continue;
    }
    out.quality.push_back(q);
    out.log_bpp.push_back(lr);
  }
  return out;
}

}  // namespace

double bd_rate(const RDCurve& anchor, const RDCurve& test, QualityMetric metric) {
  constexpr int kSamples = 1000;
  const LogRateCurve a = log_rate_curve(anchor, metric);
  const LogRateCurve t = log_rate_curve(test, metric);
  if (a.quality.size() < 4 || t.quality.size() < 4) {
    throw OutOfRangeError("bd_rate needs at least 4 finite points per curve (anchor " +
                          std::to_string(a.quality.size()) + ", test " + std::to_string(t.quality.size()) + ")");
  }
  const double lo = std::max(a.quality.front(), t.quality.front());
  const double hi = std::min(a.quality.back(), t.quality.back());
  const double span = std::max(a.quality.back(), t.quality.back()) - std::min(a.quality.front(), t.quality.front());
  if (!(hi > lo) || (hi - lo) < 0.1 * span) {
    throw OutOfRangeError("bd_rate: quality ranges overlap by less than 10% of their union");
  }
  const Pchip fa(a.quality, a.log_bpp);
  const Pchip ft(t.quality, t.log_bpp);
  const double step = (hi - lo) / kSamples;
  double integral = 0.0;
  double prev = ft(lo) - fa(lo);
  for (int i = 1; i <= kSamples; ++i) {
    const double q = i == kSamples ? hi : lo + step * i;
    const double cur = ft(q) - fa(q);
    integral += 0.5 * (prev + cur) * step;
    prev = cur;
  }
  const double mean = integral / (hi - lo);
  return 100.0 * std::expm1(mean);
}

double bpp_at_quality(const RDCurve& curve, double q, QualityMetric metric) {
  if (!std::isfinite(q)) throw OutOfRangeError("bpp_at_quality: non-finite quality target");
  for (const auto& p : curve.points()) {
    if (p.quality(metric) == q && p.bpp > 0.0) return p.bpp;
  }
  const LogRateCurve c = log_rate_curve(curve, metric);
  if (c.quality.size() < 2) throw OutOfRangeError("bpp_at_quality needs at least 2 finite points");
  if (q < c.quality.front() || q > c.quality.back()) {
    throw OutOfRangeError("quality " + std::to_string(q) + " outside curve span [" +
                          std::to_string(c.quality.front()) + ", " + std::to_string(c.quality.back()) + "]");
  }
  return std::exp(Pchip(c.quality, c.log_bpp)(q));
}

double bs_jnd(const RDCurve& baseline, const RDCurve& proposed, const JNDQuality& jnd) {
  const double bl = bpp_at_quality(baseline, jnd.value, jnd.metric);
  const double pr = bpp_at_quality(proposed, jnd.value, jnd.metric);
  return (100.0 * pr - 100.0 * bl) / bl;
}

JNDQuality jnd_quality_of_pair(const Tensor& x_o, const Tensor& x_j, QualityMetric metric,
                               const std::string& image_id) {
  JNDQuality out;
  out.metric = metric;
  out.image_id = image_id;
  out.value = metric == QualityMetric::psnr ? psnr(x_o, x_j) : msssim_metric(x_o, x_j);
  if (metric == QualityMetric::psnr ? !std::isfinite(out.value) : out.value == 1.0) {
    warn("JND threshold for '" + image_id + "' is degenerate (JND image identical to original)");
  }
  return out;
}

}  // namespace jndlc
