#include "jndlc/core/nn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "jndlc/core/error.hpp"
#include "jndlc/core/rng.hpp"

namespace jndlc::nn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<RowMatrix>;
using ConstMapMatrix = Eigen::Map<const RowMatrix>;

struct Geometry {
  int channels, height, width;  // conv input side
  int kernel, stride, pad;
  int out_h, out_w;             // conv output side
};

// cols is [channels * k * k, out_h * out_w], row-major.
void im2col(const double* x, const Geometry& g, double* cols) {
  const int out_plane = g.out_h * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        double* row = cols + static_cast<std::size_t>((c * g.kernel + ky) * g.kernel + kx) * out_plane;
        const double* src = x + static_cast<std::size_t>(c) * g.height * g.width;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          double* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= g.height) {
            std::fill(dst, dst + g.out_w, 0.0);
            continue;
          }
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < g.width) ? src[iy * g.width + ix] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col; accumulates into x (which must be zeroed by the caller).
void col2im(const double* cols, const Geometry& g, double* x) {
  const int out_plane = g.out_h * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        const double* row = cols + static_cast<std::size_t>((c * g.kernel + ky) * g.kernel + kx) * out_plane;
        double* dst = x + static_cast<std::size_t>(c) * g.height * g.width;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.height) continue;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.width) dst[iy * g.width + ix] += row[oy * g.out_w + ox];
          }
        }
      }
    }
  }
}

void require_grad_slots(std::span<Tensor> grads, std::size_t n) {
  if (!grads.empty() && grads.size() != n) throw ArgumentError("parameter gradient slot count mismatch");
}

}  // namespace

// ---- Conv2d ----------------------------------------------------------------

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      pad_(padding),
      weight_(Shape{out_channels, in_channels, kernel, kernel}),
      bias_(Shape{1, out_channels, 1, 1}) {}

Shape Conv2d::output_shape(const Shape& in) const {
  if (in.c != in_) {
    throw ShapeError("conv expects " + std::to_string(in_) + " input channels, got shape " + in.str());
  }
  const int oh = (in.h + 2 * pad_ - kernel_) / stride_ + 1;
  const int ow = (in.w + 2 * pad_ - kernel_) / stride_ + 1;
  if (oh <= 0 || ow <= 0) throw ShapeError("conv input too small: " + in.str());
  return {in.n, out_, oh, ow};
}

Tensor Conv2d::forward(const Tensor& x) const {
  const Shape os = output_shape(x.shape());
  const Geometry g{in_, x.shape().h, x.shape().w, kernel_, stride_, pad_, os.h, os.w};
  const int rows = in_ * kernel_ * kernel_;
  const int plane = os.h * os.w;
  Tensor out(os);
  AlignedBuffer cols(static_cast<std::size_t>(rows) * plane);
  ConstMapMatrix w(weight_.data(), out_, rows);
  for (int n = 0; n < os.n; ++n) {
    im2col(x.item(n), g, cols.data());
    MapMatrix y(out.item(n), out_, plane);
    y.noalias() = w * ConstMapMatrix(cols.data(), rows, plane);
    for (int c = 0; c < out_; ++c) y.row(c).array() += bias_[c];
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& x, const Tensor& grad_out, std::span<Tensor> param_grads) const {
  require_grad_slots(param_grads, 2);
  const Shape os = output_shape(x.shape());
  if (!(grad_out.shape() == os)) throw ShapeError("conv backward: gradient shape " + grad_out.shape().str());
  const Geometry g{in_, x.shape().h, x.shape().w, kernel_, stride_, pad_, os.h, os.w};
  const int rows = in_ * kernel_ * kernel_;
  const int plane = os.h * os.w;
  Tensor dx(x.shape());
  AlignedBuffer cols(static_cast<std::size_t>(rows) * plane);
  ConstMapMatrix w(weight_.data(), out_, rows);
  for (int n = 0; n < os.n; ++n) {
    ConstMapMatrix gy(grad_out.item(n), out_, plane);
    if (!param_grads.empty()) {
      im2col(x.item(n), g, cols.data());
      MapMatrix(param_grads[0].data(), out_, rows).noalias() += gy * ConstMapMatrix(cols.data(), rows, plane).transpose();
      for (int c = 0; c < out_; ++c) param_grads[1][c] += gy.row(c).sum();
    }
    MapMatrix(cols.data(), rows, plane).noalias() = w.transpose() * gy;
    col2im(cols.data(), g, dx.item(n));
  }
  return dx;
}

std::vector<ParamRef> Conv2d::parameters() { return {{"weight", &weight_}, {"bias", &bias_}}; }
std::vector<ConstParamRef> Conv2d::parameters() const { return {{"weight", &weight_}, {"bias", &bias_}}; }

// ---- ConvTranspose2d ----------------------------------------------------------

ConvTranspose2d::ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride, int padding,
                                 int output_padding)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      pad_(padding),
      out_pad_(output_padding),
      weight_(Shape{in_channels, out_channels, kernel, kernel}),
      bias_(Shape{1, out_channels, 1, 1}) {}

Shape ConvTranspose2d::output_shape(const Shape& in) const {
  if (in.c != in_) {
    throw ShapeError("deconv expects " + std::to_string(in_) + " input channels, got shape " + in.str());
  }
  const int oh = (in.h - 1) * stride_ - 2 * pad_ + kernel_ + out_pad_;
  const int ow = (in.w - 1) * stride_ - 2 * pad_ + kernel_ + out_pad_;
  return {in.n, out_, oh, ow};
}

Tensor ConvTranspose2d::forward(const Tensor& x) const {
  const Shape os = output_shape(x.shape());
  const Geometry g{out_, os.h, os.w, kernel_, stride_, pad_, x.shape().h, x.shape().w};
  const int rows = out_ * kernel_ * kernel_;
  const int plane = x.shape().h * x.shape().w;
  Tensor out(os);
  AlignedBuffer cols(static_cast<std::size_t>(rows) * plane);
  ConstMapMatrix w(weight_.data(), in_, rows);
  for (int n = 0; n < os.n; ++n) {
    MapMatrix(cols.data(), rows, plane).noalias() = w.transpose() * ConstMapMatrix(x.item(n), in_, plane);
    col2im(cols.data(), g, out.item(n));
    for (int c = 0; c < out_; ++c) {
      double* p = out.plane(n, c);
      for (std::size_t i = 0; i < os.plane(); ++i) p[i] += bias_[c];
    }
  }
  return out;
}

Tensor ConvTranspose2d::backward(const Tensor& x, const Tensor& grad_out, std::span<Tensor> param_grads) const {
  require_grad_slots(param_grads, 2);
  const Shape os = output_shape(x.shape());
  if (!(grad_out.shape() == os)) throw ShapeError("deconv backward: gradient shape " + grad_out.shape().str());
  const Geometry g{out_, os.h, os.w, kernel_, stride_, pad_, x.shape().h, x.shape().w};
  const int rows = out_ * kernel_ * kernel_;
  const int plane = x.shape().h * x.shape().w;
  Tensor dx(x.shape());
  AlignedBuffer cols(static_cast<std::size_t>(rows) * plane);
  ConstMapMatrix w(weight_.data(), in_, rows);
  for (int n = 0; n < os.n; ++n) {
    im2col(grad_out.item(n), g, cols.data());
    ConstMapMatrix gc(cols.data(), rows, plane);
    MapMatrix(dx.item(n), in_, plane).noalias() = w * gc;
    if (!param_grads.empty()) {
      MapMatrix(param_grads[0].data(), in_, rows).noalias() += ConstMapMatrix(x.item(n), in_, plane) * gc.transpose();
      for (int c = 0; c < out_; ++c) {
        const double* p = grad_out.plane(n, c);
        double s = 0.0;
        for (std::size_t i = 0; i < os.plane(); ++i) s += p[i];
        param_grads[1][c] += s;
      }
    }
  }
  return dx;
}

std::vector<ParamRef> ConvTranspose2d::parameters() { return {{"weight", &weight_}, {"bias", &bias_}}; }
std::vector<ConstParamRef> ConvTranspose2d::parameters() const { return {{"weight", &weight_}, {"bias", &bias_}}; }

// ---- Gdn ----------------------------------------------------------------------

Gdn::Gdn(int channels, bool inverse)
    : channels_(channels),
      inverse_(inverse),
      beta_(Shape{1, channels, 1, 1}, 1.0),
      gamma_(Shape{1, 1, channels, channels}, 0.0) {
  for (int c = 0; c < channels; ++c) gamma_[static_cast<std::size_t>(c) * channels + c] = 0.1;
}

Tensor Gdn::forward(const Tensor& x) const {
  if (x.shape().c != channels_) throw ShapeError("gdn channel mismatch: " + x.shape().str());
  const int plane = static_cast<int>(x.shape().plane());
  Tensor out(x.shape());
  ConstMapMatrix gamma(gamma_.data(), channels_, channels_);
  Eigen::Map<const Eigen::VectorXd> beta(beta_.data(), channels_);
  for (int n = 0; n < x.shape().n; ++n) {
    ConstMapMatrix xm(x.item(n), channels_, plane);
    RowMatrix z = gamma * xm.array().square().matrix();
    z.colwise() += beta;
    MapMatrix y(out.item(n), channels_, plane);
    if (inverse_) {
      y = xm.array() * z.array().sqrt();
    } else {
      y = xm.array() * z.array().rsqrt();
    }
  }
  return out;
}

Tensor Gdn::backward(const Tensor& x, const Tensor& grad_out, std::span<Tensor> param_grads) const {
  require_grad_slots(param_grads, 2);
  require_same_shape(x, grad_out, "gdn backward");
  const int plane = static_cast<int>(x.shape().plane());
  Tensor dx(x.shape());
  ConstMapMatrix gamma(gamma_.data(), channels_, channels_);
  Eigen::Map<const Eigen::VectorXd> beta(beta_.data(), channels_);
  for (int n = 0; n < x.shape().n; ++n) {
    ConstMapMatrix xm(x.item(n), channels_, plane);
    ConstMapMatrix gy(grad_out.item(n), channels_, plane);
    RowMatrix x2 = xm.array().square();
    RowMatrix z = gamma * x2;
    z.colwise() += beta;
    // For y = x * z^p:  dx_k = g_k z_k^p + 2 p x_k sum_c gamma_ck (g_c x_c z_c^(p-1)).
    RowMatrix t;
    MapMatrix dxm(dx.item(n), channels_, plane);
    double p;
    if (inverse_) {
      p = 0.5;
      t = gy.array() * xm.array() * z.array().rsqrt();
      dxm = gy.array() * z.array().sqrt();
    } else {
      p = -0.5;
      t = gy.array() * xm.array() * z.array().rsqrt() / z.array();
      dxm = gy.array() * z.array().rsqrt();
    }
    dxm.array() += 2.0 * p * xm.array() * (gamma.transpose() * t).array();
    if (!param_grads.empty()) {
      Eigen::Map<Eigen::VectorXd>(param_grads[0].data(), channels_) += p * t.rowwise().sum();
      MapMatrix(param_grads[1].data(), channels_, channels_).noalias() += p * (t * x2.transpose());
    }
  }
  return dx;
}

std::vector<ParamRef> Gdn::parameters() { return {{"beta", &beta_}, {"gamma", &gamma_}}; }
std::vector<ConstParamRef> Gdn::parameters() const { return {{"beta", &beta_}, {"gamma", &gamma_}}; }

void Gdn::project() {
  for (auto& b : beta_.values()) b = std::max(b, kBetaMin);
  for (auto& g : gamma_.values()) g = std::max(g, 0.0);
}

// ---- activations / pooling ------------------------------------------------------

Tensor LeakyRelu::forward(const Tensor& x) const {
  Tensor out = x;
  for (auto& v : out.values()) v = v > 0.0 ? v : slope_ * v;
  return out;
}

Tensor LeakyRelu::backward(const Tensor& x, const Tensor& grad_out, std::span<Tensor>) const {
  require_same_shape(x, grad_out, "leaky relu backward");
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(x[i] > 0.0)) dx[i] *= slope_;
  }
  return dx;
}

Tensor AvgPool2::forward(const Tensor& x) const {
  const Shape& s = x.shape();
  Tensor out(Shape{s.n, s.c, s.h / 2, s.w / 2});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* src = x.plane(n, c);
      double* dst = out.plane(n, c);
      for (int y = 0; y < s.h / 2; ++y) {
        for (int xx = 0; xx < s.w / 2; ++xx) {
          const double* p = src + 2 * y * s.w + 2 * xx;
          dst[y * (s.w / 2) + xx] = 0.25 * (p[0] + p[1] + p[s.w] + p[s.w + 1]);
        }
      }
    }
  }
  return out;
}

Tensor AvgPool2::backward(const Tensor& x, const Tensor& grad_out, std::span<Tensor>) const {
  const Shape& s = x.shape();
  Tensor dx(s);
  const int ow = s.w / 2;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* g = grad_out.plane(n, c);
      double* dst = dx.plane(n, c);
      for (int y = 0; y < s.h / 2; ++y) {
        for (int xx = 0; xx < ow; ++xx) {
          const double v = 0.25 * g[y * ow + xx];
          double* p = dst + 2 * y * s.w + 2 * xx;
          p[0] += v;
          p[1] += v;
          p[s.w] += v;
          p[s.w + 1] += v;
        }
      }
    }
  }
  return dx;
}

// ---- Sequential -----------------------------------------------------------------

Sequential::Sequential(const Sequential& other) : grads_(other.grads_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Sequential& Sequential::operator=(const Sequential& other) {
  if (this != &other) {
    Sequential tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

void Sequential::add(std::unique_ptr<Layer> layer) {
  layers_.push_back(std::move(layer));
  grads_.clear();
}

Tensor Sequential::forward(const Tensor& x) const {
  Tensor h = x;
  for (const auto& l : layers_) h = l->forward(h);
  return h;
}

Tensor Sequential::forward(const Tensor& x, std::vector<Tensor>& activations) const {
  activations.clear();
  activations.reserve(layers_.size() + 1);
  activations.push_back(x);
  for (const auto& l : layers_) activations.push_back(l->forward(activations.back()));
  return activations.back();
}

void Sequential::ensure_grads() {
  if (grads_.size() == layers_.size()) return;
  grads_.clear();
  for (auto& l : layers_) {
    std::vector<Tensor> g;
    for (auto& p : l->parameters()) g.emplace_back(p.value->shape());
    grads_.push_back(std::move(g));
  }
}

Tensor Sequential::backward(const std::vector<Tensor>& activations, const Tensor& grad_out, bool param_grads) {
  if (activations.size() != layers_.size() + 1) throw ArgumentError("activation record does not match network depth");
  if (param_grads) ensure_grads();
  Tensor g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    std::span<Tensor> slots;
    if (param_grads) slots = grads_[i];
    g = layers_[i]->backward(activations[i], g, slots);
  }
  return g;
}

Tensor Sequential::backward_input(const std::vector<Tensor>& activations, const Tensor& grad_out) const {
  if (activations.size() != layers_.size() + 1) throw ArgumentError("activation record does not match network depth");
  Tensor g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(activations[i], g, {});
  return g;
}

std::vector<ParamRef> Sequential::parameters(const std::string& prefix) {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (auto& p : layers_[i]->parameters()) {
      out.push_back({prefix + "." + std::to_string(i) + "." + p.name, p.value});
    }
  }
  return out;
}

std::vector<ConstParamRef> Sequential::parameters(const std::string& prefix) const {
  std::vector<ConstParamRef> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = *layers_[i];
    for (auto& p : l.parameters()) {
      out.push_back({prefix + "." + std::to_string(i) + "." + p.name, p.value});
    }
  }
  return out;
}

std::vector<Tensor*> Sequential::gradients() {
  ensure_grads();
  std::vector<Tensor*> out;
  for (auto& g : grads_) {
    for (auto& t : g) out.push_back(&t);
  }
  return out;
}

void Sequential::zero_grad() {
  ensure_grads();
  for (auto& g : grads_) {
    for (auto& t : g) t.fill(0.0);
  }
}

void Sequential::project() {
  for (auto& l : layers_) l->project();
}

void init_uniform_fan_in(Sequential& net, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < net.size(); ++i) {
    Layer& l = net.layer(i);
    Tensor* w = nullptr;
    Tensor* b = nullptr;
    int fan_in = 0;
    if (auto* conv = dynamic_cast<Conv2d*>(&l)) {
      w = &conv->weight();
      b = &conv->bias();
      fan_in = w->shape().c * w->shape().h * w->shape().w;
    } else if (auto* deconv = dynamic_cast<ConvTranspose2d*>(&l)) {
      w = &deconv->weight();
      b = &deconv->bias();
      fan_in = w->shape().c * w->shape().h * w->shape().w;
    } else {
      continue;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : w->values()) v = rng.uniform(-bound, bound);
    for (auto& v : b->values()) v = rng.uniform(-bound, bound);
  }
}

}  // namespace jndlc::nn
