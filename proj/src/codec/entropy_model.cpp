#include "jndlc/codec/entropy_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "jndlc/core/error.hpp"
#include "jndlc/core/rng.hpp"

namespace jndlc {
namespace {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
double sigmoid_grad(double x) { return sigmoid(x) * sigmoid(-x); }

}  // namespace

double CumulativeModel::likelihood(int c, double v) const { return std::max(bin_mass(c, v), kLikelihoodFloor); }

void CumulativeModel::require_channels(const Tensor& values) const {
  if (values.shape().c != channels()) {
    throw ShapeError("entropy model has " + std::to_string(channels()) + " channels, latent shape is " +
                     values.shape().str());
  }
}

Tensor CumulativeModel::likelihood(const Tensor& values) const {
  require_channels(values);
  Tensor out(values.shape());
  const std::size_t plane = values.shape().plane();
  for (int n = 0; n < values.shape().n; ++n) {
    for (int c = 0; c < channels(); ++c) {
      const double* src = values.plane(n, c);
      double* dst = out.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) dst[i] = likelihood(c, src[i]);
    }
  }
  return out;
}

UniformCdfModel::UniformCdfModel(int channels, int lo, int hi) : channels_(channels), lo_(lo), hi_(hi) {
  if (channels <= 0 || hi < lo) throw ArgumentError("uniform model needs channels > 0 and lo <= hi");
}

double UniformCdfModel::cdf(int, double x) const {
  const double a = lo_ - 0.5;
  const double b = hi_ + 0.5;
  return std::clamp((x - a) / (b - a), 0.0, 1.0);
}

// Per-scalar forward record: each layer's input vector and tanh of its pre-gate output.
struct EntropyModel::Trace {
  std::array<std::array<double, kMaxWidth>, 8> input{};
  std::array<std::array<double, kMaxWidth>, 8> tanh_pre{};
  double out = 0.0;
};

EntropyModel::EntropyModel(int channels, std::vector<int> filters, double init_scale, std::uint64_t seed)
    : channels_(channels), filters_(std::move(filters)), init_scale_(init_scale) {
  if (channels <= 0) throw ArgumentError("entropy model needs at least one channel");
  if (filters_.size() + 1 > 8) throw ArgumentError("entropy model supports at most 7 hidden layers");
  if (!(init_scale > 0.0)) throw ArgumentError("entropy model init_scale must be positive");
  dims_.push_back(1);
  for (int f : filters_) {
    if (f <= 0 || f > kMaxWidth) throw ArgumentError("entropy model filter width must be in [1, 16]");
    dims_.push_back(f);
  }
  dims_.push_back(1);
  const int layers = static_cast<int>(dims_.size()) - 1;
  per_channel_ = 0;
  for (int k = 0; k < layers; ++k) {
    per_channel_ += static_cast<std::size_t>(dims_[k + 1]) * dims_[k] + dims_[k + 1];
    if (k + 1 < layers) per_channel_ += dims_[k + 1];
  }
  params_.assign(per_channel_ * channels_, 0.0);
  grads_.assign(params_.size(), 0.0);

  const double scale = std::pow(init_scale_, 1.0 / layers);
  Rng rng(seed);
  for (int c = 0; c < channels_; ++c) {
    double* p = params_.data() + channel_offset(c);
    for (int k = 0; k < layers; ++k) {
      const double init = std::log(std::expm1(1.0 / scale / dims_[k + 1]));
      const int m = dims_[k + 1] * dims_[k];
      std::fill(p, p + m, init);
      p += m;
      for (int i = 0; i < dims_[k + 1]; ++i) *p++ = rng.uniform(-0.5, 0.5);
      if (k + 1 < layers) p += dims_[k + 1];  // gate factors start at zero
    }
  }
}

// Derived per-channel constants: softplus of each matrix, its derivative and
// tanh of each gate factor, plus offsets into the raw parameter block.
struct EntropyModel::Channel {
  std::array<std::array<double, kMaxWidth * kMaxWidth>, 8> mat{};
  std::array<std::array<double, kMaxWidth * kMaxWidth>, 8> mat_grad{};
  std::array<std::array<double, kMaxWidth>, 8> bias{};
  std::array<std::array<double, kMaxWidth>, 8> gate{};
  std::array<std::size_t, 8> offset{};
  std::size_t base = 0;
};

void EntropyModel::prepare(int c, Channel& ch) const {
  const int layers = static_cast<int>(dims_.size()) - 1;
  ch.base = channel_offset(c);
  const double* p = params_.data() + ch.base;
  std::size_t off = 0;
  for (int k = 0; k < layers; ++k) {
    const int din = dims_[k];
    const int dout = dims_[k + 1];
    ch.offset[k] = off;
    for (int i = 0; i < dout * din; ++i) {
      ch.mat[k][i] = softplus(p[off + i]);
      ch.mat_grad[k][i] = sigmoid(p[off + i]);
    }
    off += static_cast<std::size_t>(dout) * din;
    for (int i = 0; i < dout; ++i) ch.bias[k][i] = p[off + i];
    off += dout;
    if (k + 1 < layers) {
      for (int i = 0; i < dout; ++i) ch.gate[k][i] = std::tanh(p[off + i]);
      off += dout;
    }
  }
}

double EntropyModel::logits_forward(const Channel& ch, double x, Trace* trace) const {
  const int layers = static_cast<int>(dims_.size()) - 1;
  std::array<double, kMaxWidth> cur{};
  std::array<double, kMaxWidth> next{};
  cur[0] = x;
  for (int k = 0; k < layers; ++k) {
    const int din = dims_[k];
    const int dout = dims_[k + 1];
    const double* mat = ch.mat[k].data();
    if (trace) trace->input[k] = cur;
    for (int i = 0; i < dout; ++i) {
      double acc = ch.bias[k][i];
      for (int j = 0; j < din; ++j) acc += mat[i * din + j] * cur[j];
      next[i] = acc;
    }
    if (k + 1 < layers) {
      for (int i = 0; i < dout; ++i) {
        const double t = std::tanh(next[i]);
        if (trace) trace->tanh_pre[k][i] = t;
        next[i] += ch.gate[k][i] * t;
      }
    }
    cur = next;
  }
  if (trace) trace->out = cur[0];
  return cur[0];
}

double EntropyModel::logits_backward(const Channel& ch, const Trace& trace, double grad_out,
                                     double* grad_params) const {
  const int layers = static_cast<int>(dims_.size()) - 1;
  double* gbase = grad_params ? grad_params + ch.base : nullptr;
  std::array<double, kMaxWidth> g{};
  g[0] = grad_out;
  for (int k = layers - 1; k >= 0; --k) {
    const int din = dims_[k];
    const int dout = dims_[k + 1];
    double* gmat = gbase ? gbase + ch.offset[k] : nullptr;
    double* gbias = gmat ? gmat + dout * din : nullptr;
    double* gfactor = gbias ? gbias + dout : nullptr;

    std::array<double, kMaxWidth> gpre{};
    for (int i = 0; i < dout; ++i) {
      if (k + 1 < layers) {
        const double th = trace.tanh_pre[k][i];
        const double ta = ch.gate[k][i];
        gpre[i] = g[i] * (1.0 + ta * (1.0 - th * th));
        if (gfactor) gfactor[i] += g[i] * th * (1.0 - ta * ta);
      } else {
        gpre[i] = g[i];
      }
    }
    std::array<double, kMaxWidth> gin{};
    for (int i = 0; i < dout; ++i) {
      if (gbias) gbias[i] += gpre[i];
      for (int j = 0; j < din; ++j) {
        if (gmat) gmat[i * din + j] += gpre[i] * trace.input[k][j] * ch.mat_grad[k][i * din + j];
        gin[j] += gpre[i] * ch.mat[k][i * din + j];
      }
    }
    g = gin;
  }
  return g[0];
}

namespace {

// Difference of sigmoids on the side with more relative precision.
double sigmoid_difference(double upper, double lower) {
  if (upper + lower > 0.0) return std::abs(sigmoid(-lower) - sigmoid(-upper));
  return std::abs(sigmoid(upper) - sigmoid(lower));
}

}  // namespace

double EntropyModel::logits(int c, double x) const {
  Channel ch;
  prepare(c, ch);
  return logits_forward(ch, x, nullptr);
}

double EntropyModel::cdf(int c, double x) const { return sigmoid(logits(c, x)); }

double EntropyModel::bin_mass(const Channel& ch, double v) const {
  return sigmoid_difference(logits_forward(ch, v + 0.5, nullptr), logits_forward(ch, v - 0.5, nullptr));
}

double EntropyModel::bin_mass(int c, double v) const {
  Channel ch;
  prepare(c, ch);
  return bin_mass(ch, v);
}

Tensor EntropyModel::likelihood(const Tensor& values) const {
  require_channels(values);
  Tensor out(values.shape());
  const std::size_t plane = values.shape().plane();
  Channel ch;
  for (int c = 0; c < channels_; ++c) {
    prepare(c, ch);
    for (int n = 0; n < values.shape().n; ++n) {
      const double* src = values.plane(n, c);
      double* dst = out.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) dst[i] = std::max(bin_mass(ch, src[i]), kLikelihoodFloor);
    }
  }
  return out;
}

Tensor EntropyModel::likelihood_backward(const Tensor& values, const Tensor& grad_p) {
  require_channels(values);
  require_same_shape(values, grad_p, "likelihood backward");
  Tensor grad_v(values.shape());
  const std::size_t plane = values.shape().plane();
  Trace up;
  Trace lo;
  Channel ch;
  for (int c = 0; c < channels_; ++c) {
    prepare(c, ch);
    for (int n = 0; n < values.shape().n; ++n) {
      const double* src = values.plane(n, c);
      const double* gp = grad_p.plane(n, c);
      double* gv = grad_v.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        const double u = logits_forward(ch, src[i] + 0.5, &up);
        const double l = logits_forward(ch, src[i] - 0.5, &lo);
        const double mass = sigmoid_difference(u, l);
        if (mass < kLikelihoodFloor && gp[i] >= 0.0) continue;
        const double gu = gp[i] * sigmoid_grad(u);
        const double gl = -gp[i] * sigmoid_grad(l);
        gv[i] = logits_backward(ch, up, gu, grads_.data()) + logits_backward(ch, lo, gl, grads_.data());
      }
    }
  }
  return grad_v;
}

void EntropyModel::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

bool EntropyModel::operator==(const EntropyModel& other) const {
  return channels_ == other.channels_ && filters_ == other.filters_ && init_scale_ == other.init_scale_ &&
         params_ == other.params_;
}

}  // namespace jndlc
