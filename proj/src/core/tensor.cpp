#include "jndlc/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "jndlc/core/error.hpp"

namespace jndlc {

std::string Shape::str() const {
  std::ostringstream os;
  os << '[' << n << ',' << c << ',' << h << ',' << w << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw ShapeError("negative extent in shape " + shape.str());
  }
  values_.assign(shape.count(), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(shape), values_(values.begin(), values.end()) {
  if (values_.size() != shape.count()) {
    throw ShapeError("value count " + std::to_string(values_.size()) + " does not match shape " + shape.str());
  }
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Tensor& Tensor::operator+=(const Tensor& other) {
  require_same_shape(*this, other, "tensor add");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (auto& v : values_) v *= s;
  return *this;
}

Tensor Tensor::slice_batch(int first, int count) const {
  if (first < 0 || count < 0 || first + count > shape_.n) {
    throw ShapeError("batch slice out of range for " + shape_.str());
  }
  Shape s = shape_;
  s.n = count;
  const std::size_t per = static_cast<std::size_t>(shape_.c) * shape_.plane();
  std::vector<double> v(values_.begin() + static_cast<std::ptrdiff_t>(first * per),
                        values_.begin() + static_cast<std::ptrdiff_t>((first + count) * per));
  return Tensor(s, std::move(v));
}

Tensor Tensor::stack(std::span<const Tensor> items) {
  if (items.empty()) return Tensor();
  Shape s = items.front().shape();
  s.n = 0;
  for (const auto& t : items) {
    const auto& ts = t.shape();
    if (ts.c != s.c || ts.h != s.h || ts.w != s.w) {
      throw ShapeError("cannot stack " + ts.str() + " with " + items.front().shape().str());
    }
    s.n += ts.n;
  }
  std::vector<double> v;
  v.reserve(s.count());
  for (const auto& t : items) v.insert(v.end(), t.values().begin(), t.values().end());
  return Tensor(s, std::move(v));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
}

void require_image(const Tensor& x, const char* what) {
  if (x.shape().c != 3) {
    throw ShapeError(std::string(what) + ": expected 3 channels, got shape " + x.shape().str());
  }
  if (!x.all_finite()) throw NumericError(std::string(what) + ": non-finite pixel values");
}

Tensor clamp01(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

double sum(const Tensor& x) { return std::accumulate(x.values().begin(), x.values().end(), 0.0); }

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace jndlc
