#pragma once

#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace jndlc {

/// Heap storage on 64-byte boundaries. Vectorized kernels split their loops
/// by address alignment, so a fixed alignment keeps results bit-reproducible.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const {
    return true;
  }
};

using AlignedBuffer = std::vector<double, AlignedAllocator<double>>;

/// NCHW extents.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense double-precision NCHW array. Plays images, latents, activations and
/// their gradients; the meaning is carried by the surrounding API.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double& at(int n, int c, int y, int x) { return values_[index(n, c, y, x)]; }
  double at(int n, int c, int y, int x) const { return values_[index(n, c, y, x)]; }

  /// Pointer to the start of the (n, c) plane.
  double* plane(int n, int c) { return values_.data() + (static_cast<std::size_t>(n) * shape_.c + c) * shape_.plane(); }
  const double* plane(int n, int c) const {
    return values_.data() + (static_cast<std::size_t>(n) * shape_.c + c) * shape_.plane();
  }
  /// Pointer to the start of batch item n.
  double* item(int n) { return plane(n, 0); }
  const double* item(int n) const { return plane(n, 0); }

  void fill(double v);
  bool all_finite() const;
  bool operator==(const Tensor&) const = default;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(double s);

  /// Copy of batch items [first, first + count).
  Tensor slice_batch(int first, int count) const;
  /// Concatenation along the batch axis; all inputs share c, h, w.
  static Tensor stack(std::span<const Tensor> items);

 private:
  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  Shape shape_{};
  AlignedBuffer values_;
};

/// Throws ShapeError unless a and b have identical shapes.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

/// Throws unless `x` is a finite 3-channel batch.
void require_image(const Tensor& x, const char* what);

/// Element-wise clamp into [0, 1].
Tensor clamp01(const Tensor& x);

double sum(const Tensor& x);
double dot(const Tensor& a, const Tensor& b);

}  // namespace jndlc
