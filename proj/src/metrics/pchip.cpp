#include "jndlc/metrics/pchip.hpp"

#include <algorithm>
#include <cmath>

#include "jndlc/core/error.hpp"

namespace jndlc {
namespace {

double end_slope(double h0, double h1, double d0, double d1) {
  double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
  if (std::signbit(m) != std::signbit(d0) || m == 0.0) {
    m = 0.0;
  } else if (std::signbit(d0) != std::signbit(d1) && std::abs(m) > std::abs(3.0 * d0)) {
    m = 3.0 * d0;
  }
  return m;
}

}  // namespace

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw ArgumentError("pchip needs at least two (x, y) pairs of equal length");
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(x_[i + 1] > x_[i])) throw ArgumentError("pchip abscissae must be strictly increasing");
  }
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    delta[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  slope_.assign(n, 0.0);
  if (n == 2) {
    slope_[0] = slope_[1] = delta[0];
    return;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] == 0.0 || delta[i] == 0.0 || std::signbit(delta[i - 1]) != std::signbit(delta[i])) {
      slope_[i] = 0.0;
    } else {
      // Weighted harmonic mean.
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      slope_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  slope_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  slope_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

double Pchip::operator()(double x) const {
  if (x < x_.front() || x > x_.back()) throw OutOfRangeError("pchip: query outside the knot span");
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  if (i >= x_.size() - 1) i = x_.size() - 2;
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  if (t == 0.0) return y_[i];
  if (t == 1.0) return y_[i + 1];
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  return h00 * y_[i] + h10 * h * slope_[i] + h01 * y_[i + 1] + h11 * h * slope_[i + 1];
}

}  // namespace jndlc
