#include "jndlc/train/optimizer.hpp"

#include <cmath>

#include "jndlc/core/error.hpp"

namespace jndlc {

Adam::Adam(AdamOptions opts, double learning_rate) : opts_(opts), lr_(learning_rate) {}

void Adam::step(const std::vector<std::span<double>>& params, const std::vector<std::span<double>>& grads) {
  if (params.size() != grads.size()) throw ArgumentError("Adam: parameter and gradient block counts differ");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw ArgumentError("Adam: block layout changed between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b];
    auto g = grads[b];
    auto& m = m_[b];
    auto& v = v_[b];
    if (p.size() != g.size() || p.size() != m.size()) throw ArgumentError("Adam: block size mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g[i];
      v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g[i] * g[i];
      p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + opts_.eps);
    }
  }
}

double global_norm(const std::vector<std::span<double>>& grads) {
  double s = 0.0;
  for (const auto& g : grads) {
    for (double v : g) s += v * v;
  }
  return std::sqrt(s);
}

double clip_global_norm(const std::vector<std::span<double>>& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (const auto& g : grads) {
      for (double& v : g) v *= s;
    }
  }
  return norm;
}

}  // namespace jndlc
