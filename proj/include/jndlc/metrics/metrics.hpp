#pragma once

#include <limits>
#include <string>
#include <vector>

#include "jndlc/core/tensor.hpp"

namespace jndlc {

enum class QualityMetric { psnr, msssim };

std::string to_string(QualityMetric m);
QualityMetric parse_metric(const std::string& s);

/// PSNR of identical images: +infinity is the sentinel.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// 10 log10(1 / mse) for unit peak.
double psnr(const Tensor& a, const Tensor& b);
/// MS-SSIM in [0, 1] (scale count auto-reduced for small images).
double msssim_metric(const Tensor& a, const Tensor& b);

struct RDPoint {
  double bpp = 0.0;
  double psnr = 0.0;
  double msssim = 0.0;
  double lambda = 0.0;
  std::string method_id;

  double quality(QualityMetric m) const { return m == QualityMetric::psnr ? psnr : msssim; }
};

/// Points sorted strictly ascending in bpp for one method on one image/set.
class RDCurve {
 public:
  RDCurve() = default;
  /// Sorts by bpp. Throws ArgumentError on duplicate or negative bpp or
  /// msssim outside [0, 1]; warns when quality decreases with bpp.
  RDCurve(std::vector<RDPoint> points, std::string method_id = {}, std::string dataset_id = {});

  const std::vector<RDPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  const std::string& method_id() const { return method_id_; }
  const std::string& dataset_id() const { return dataset_id_; }

 private:
  std::vector<RDPoint> points_;
  std::string method_id_;
  std::string dataset_id_;
};

struct JNDQuality {
  double value = 0.0;
  QualityMetric metric = QualityMetric::psnr;
  std::string image_id;
};

/// Bjontegaard delta rate in percent (negative: `test` saves bitrate).
/// log(bpp) is interpolated against quality with a monotone piecewise cubic,
/// the difference is averaged over the shared quality interval by trapezoidal
/// integration, and 100 (exp(mean) - 1) is returned. Throws OutOfRangeError
/// when either curve has fewer than 4 finite points or the quality overlap is
/// below 10% of the union span.
double bd_rate(const RDCurve& anchor, const RDCurve& test, QualityMetric metric);

/// Bitrate at which the curve reaches quality q (no extrapolation). Knot
/// qualities return the knot's bpp exactly.
double bpp_at_quality(const RDCurve& curve, double q, QualityMetric metric);

/// 100 (bpp_proposed - bpp_baseline) / bpp_baseline at the JND quality.
double bs_jnd(const RDCurve& baseline, const RDCurve& proposed, const JNDQuality& jnd);

/// The JND quality threshold of a labeled pair: metric(x_o, x_j).
JNDQuality jnd_quality_of_pair(const Tensor& x_o, const Tensor& x_j, QualityMetric metric,
                               const std::string& image_id = {});

}  // namespace jndlc
