#pragma once

#include <cstdint>
#include <filesystem>

#include "jndlc/core/tensor.hpp"
#include "jndlc/data/dataset.hpp"

namespace jndlc {

inline constexpr int kMaxProxyLevel = 10;

/// Stand-in for a human-labeled JND image: each 8x8 block of every channel is
/// DCT-transformed, its coefficients are rounded to a frequency-weighted step
/// that grows linearly with `level`, and the result is transformed back and
/// clamped to [0, 1]. Level 0 returns the input unchanged. Partial edge blocks
/// are processed with replicated borders. Throws ArgumentError for levels
/// outside [0, kMaxProxyLevel].
Tensor synth_jnd_proxy(const Tensor& x_o, int level);

/// Quantization step of DCT coefficient (u, v) at `level`.
double proxy_step(int level, int u, int v);

/// Deterministic [1, 3, h, w] test image: colour gradient, random flat
/// shapes, a striped texture patch and mild noise.
Tensor synth_toy_image(int h, int w, std::uint64_t seed);

struct ToyCorpus {
  DatasetManifest labeled;
  DatasetManifest unlabeled;
};

/// Writes `n_labeled` original/JND PNG pairs and `n_unlabeled` originals
/// under `dir`, plus labeled.jsonl and unlabeled.jsonl manifests.
ToyCorpus write_toy_corpus(const std::filesystem::path& dir, int n_labeled, int n_unlabeled, int h, int w,
                           int level, std::uint64_t seed);

/// Fabricates JND images for every entry of `source` with synth_jnd_proxy,
/// writing them under `out_dir`; returns the labeled manifest.
DatasetManifest synth_label_manifest(const DatasetManifest& source, int level, const std::filesystem::path& out_dir);

}  // namespace jndlc
