#pragma once

#include <vector>

namespace jndlc {

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch-Carlson
/// slopes with the three-point end formula). Passes through every knot and
/// never overshoots monotone data. Two knots degenerate to a straight line.
class Pchip {
 public:
  /// `x` strictly increasing, same length as `y`, at least 2 points.
  Pchip(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;
  double min_x() const { return x_.front(); }
  double max_x() const { return x_.back(); }

 private:
  std::vector<double> x_, y_, slope_;
};

}  // namespace jndlc
