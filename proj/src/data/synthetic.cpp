#include "jndlc/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "jndlc/core/error.hpp"
#include "jndlc/core/rng.hpp"
#include "jndlc/data/image_io.hpp"

namespace jndlc {

namespace {

constexpr int kBlock = 8;

using Block = Eigen::Matrix<double, kBlock, kBlock>;

const Block& dct_matrix() {
  static const Block m = [] {
    Block d;
    for (int k = 0; k < kBlock; ++k) {
      const double a = k == 0 ? std::sqrt(1.0 / kBlock) : std::sqrt(2.0 / kBlock);
      for (int n = 0; n < kBlock; ++n) d(k, n) = a * std::cos(std::numbers::pi * (2 * n + 1) * k / (2.0 * kBlock));
    }
    return d;
  }();
  return m;
}

}  // namespace

double proxy_step(int level, int u, int v) { return 0.012 * level * (1.0 + (u + v) / 4.0); }

Tensor synth_jnd_proxy(const Tensor& x_o, int level) {
  if (level < 0 || level > kMaxProxyLevel) {
    throw ArgumentError("proxy level " + std::to_string(level) + " outside [0, " + std::to_string(kMaxProxyLevel) +
                        "]");
  }
  if (level == 0) return x_o;
  const Shape s = x_o.shape();
  const Block& d = dct_matrix();
  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* src = x_o.plane(n, c);
      double* dst = out.plane(n, c);
      for (int by = 0; by < s.h; by += kBlock) {
        for (int bx = 0; bx < s.w; bx += kBlock) {
          Block b;
          for (int y = 0; y < kBlock; ++y) {
            for (int x = 0; x < kBlock; ++x) {
              const int yy = std::min(by + y, s.h - 1);
              const int xx = std::min(bx + x, s.w - 1);
              b(y, x) = src[static_cast<std::size_t>(yy) * s.w + xx];
            }
          }
          Block coef = d * b * d.transpose();
          for (int u = 0; u < kBlock; ++u) {
            for (int v = 0; v < kBlock; ++v) {
              const double q = proxy_step(level, u, v);
              coef(u, v) = q * std::nearbyint(coef(u, v) / q);
            }
          }
          const Block rec = d.transpose() * coef * d;
          for (int y = 0; y < kBlock && by + y < s.h; ++y) {
            for (int x = 0; x < kBlock && bx + x < s.w; ++x) {
              dst[static_cast<std::size_t>(by + y) * s.w + bx + x] = std::clamp(rec(y, x), 0.0, 1.0);
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor synth_toy_image(int h, int w, std::uint64_t seed) {
  if (h <= 0 || w <= 0) throw ArgumentError("toy image needs positive dimensions");
  Rng rng(seed);
  Tensor x({1, 3, h, w});
  double corner[4][3];
  for (auto& k : corner) {
    for (double& v : k) v = rng.uniform(0.15, 0.85);
  }
  for (int y = 0; y < h; ++y) {
    const double fy = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
    for (int xx = 0; xx < w; ++xx) {
      const double fx = w > 1 ? static_cast<double>(xx) / (w - 1) : 0.0;
      for (int c = 0; c < 3; ++c) {
        x.at(0, c, y, xx) = (1 - fy) * ((1 - fx) * corner[0][c] + fx * corner[1][c]) +
                            fy * ((1 - fx) * corner[2][c] + fx * corner[3][c]);
      }
    }
  }
  const int shapes = 3 + static_cast<int>(rng.index(4));
  for (int k = 0; k < shapes; ++k) {
    const bool ellipse = rng.uniform() < 0.5;
    const double cy = rng.uniform(0, h), cx = rng.uniform(0, w);
    const double ry = rng.uniform(0.08, 0.3) * h, rx = rng.uniform(0.08, 0.3) * w;
    double col[3];
    for (double& v : col) v = rng.uniform(0.05, 0.95);
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        const double dy = (y - cy) / ry, dx = (xx - cx) / rx;
        const bool inside = ellipse ? dy * dy + dx * dx <= 1.0 : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
        if (inside) {
          for (int c = 0; c < 3; ++c) x.at(0, c, y, xx) = col[c];
        }
      }
    }
  }
  const double ty = rng.uniform(0, h * 0.5), tx = rng.uniform(0, w * 0.5);
  const double th = h * 0.4, tw = w * 0.4;
  const double freq = rng.uniform(0.3, 0.9), angle = rng.uniform(0, std::numbers::pi);
  const double amp = rng.uniform(0.1, 0.25);
  for (int y = static_cast<int>(ty); y < std::min<double>(h, ty + th); ++y) {
    for (int xx = static_cast<int>(tx); xx < std::min<double>(w, tx + tw); ++xx) {
      const double t = amp * std::sin(freq * (std::cos(angle) * xx + std::sin(angle) * y));
      for (int c = 0; c < 3; ++c) x.at(0, c, y, xx) += t;
    }
  }
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i] + 0.01 * rng.normal(), 0.0, 1.0);
  return x;
}

ToyCorpus write_toy_corpus(const std::filesystem::path& dir, int n_labeled, int n_unlabeled, int h, int w,
                           int level, std::uint64_t seed) {
  if (n_labeled < 0 || n_unlabeled < 0) throw ArgumentError("toy corpus counts must be non-negative");
  std::filesystem::create_directories(dir / "orig");
  std::filesystem::create_directories(dir / "jnd");
  ToyCorpus out;
  for (int i = 0; i < n_labeled + n_unlabeled; ++i) {
    const bool labeled = i < n_labeled;
    char name[32];
    std::snprintf(name, sizeof name, "%s%04d", labeled ? "jnd" : "ext", labeled ? i : i - n_labeled);
    const std::string id = name;
    const Tensor img = synth_toy_image(h, w, derive_seed(seed, static_cast<std::uint64_t>(i)));
    ManifestEntry e;
    e.image_id = id;
    e.path_o = std::filesystem::path("orig") / (id + ".png");
    save_image(img, dir / e.path_o);
    if (labeled) {
      e.path_j = std::filesystem::path("jnd") / (id + ".png");
      save_image(synth_jnd_proxy(img, level), dir / *e.path_j);
      e.source = SampleSource::jnd_labeled;
      out.labeled.entries.push_back(e);
    } else {
      e.source = SampleSource::unlabeled_proxy;
      out.unlabeled.entries.push_back(e);
    }
  }
  out.labeled.save(dir / "labeled.jsonl");
  out.unlabeled.save(dir / "unlabeled.jsonl");
  for (auto* m : {&out.labeled, &out.unlabeled}) {
    for (auto& e : m->entries) {
      e.path_o = dir / e.path_o;
      if (e.path_j) e.path_j = dir / *e.path_j;
    }
  }
  return out;
}

DatasetManifest synth_label_manifest(const DatasetManifest& source, int level, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  DatasetManifest out = source;
  for (auto& e : out.entries) {
    const Tensor x = load_image(e.path_o);
    const std::filesystem::path pj = out_dir / (e.image_id + "_jnd.png");
    save_image(synth_jnd_proxy(x, level), pj);
    e.path_j = std::filesystem::absolute(pj);
    e.source = SampleSource::jnd_labeled;
  }
  return out;
}

}  // namespace jndlc
