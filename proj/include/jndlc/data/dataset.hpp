#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "jndlc/core/tensor.hpp"

namespace jndlc {

enum class SampleSource { jnd_labeled, unlabeled_proxy };

std::string to_string(SampleSource s);
SampleSource parse_source(const std::string& s);

struct ManifestEntry {
  std::string image_id;
  std::filesystem::path path_o;
  std::optional<std::filesystem::path> path_j;
  SampleSource source = SampleSource::jnd_labeled;

  bool operator==(const ManifestEntry&) const = default;
};

enum class Split { all, train, eval };

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  Split split = Split::all;
  std::uint64_t seed = 0;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  /// JSON lines, one `{image_id, path_o, path_j?, source}` object per line.
  /// Relative paths are resolved against the manifest's directory.
  static DatasetManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  /// Throws IoError for missing files and ConfigError for labeled entries
  /// without a JND path or duplicate image ids.
  void check() const;
};

struct ManifestSplit {
  DatasetManifest train;
  DatasetManifest eval;
};

/// Seeded shuffle, then the first round(fraction * n) entries go to train.
/// Throws ArgumentError on an empty manifest or fraction outside (0, 1).
ManifestSplit split_manifest(const DatasetManifest& m, double train_fraction, std::uint64_t seed);

/// One epoch's stream: every labeled entry plus an equal number of unlabeled
/// entries (re-tagged unlabeled_proxy), in seeded random order. Unlabeled
/// entries are drawn without replacement when the pool is large enough and
/// with replacement (plus a warning) otherwise; an empty pool yields the
/// labeled entries alone (plus a warning). Throws ArgumentError when
/// `labeled` is empty.
std::vector<ManifestEntry> mix_sources(const DatasetManifest& labeled, const DatasetManifest& unlabeled,
                                       std::uint64_t seed);

struct SamplePair {
  Tensor x_o;
  Tensor x_j;
  SampleSource source = SampleSource::jnd_labeled;
  std::string image_id;
};

/// Loads the images of one entry; proxy entries get x_j as a copy of x_o.
SamplePair load_pair(const ManifestEntry& e);

/// Pair whose JND image is the original itself.
SamplePair make_proxy_pair(Tensor x_o, std::string image_id);

struct PatchSpec {
  int size = 256;
  int patches_per_image = 1;
  std::uint64_t seed = 0;

  /// Throws ConfigError unless size is positive and divisible by
  /// `downsampling` and patches_per_image >= 1.
  void validate(int downsampling) const;
};

/// Crops the same random windows from x_o and x_j. Offsets depend only on
/// (spec.seed, image_id). Images smaller than the patch yield an empty list
/// and a warning.
std::vector<SamplePair> extract_aligned_patches(const SamplePair& pair, const PatchSpec& spec);

/// Crop of a [N, C, H, W] tensor at (top, left).
Tensor crop_window(const Tensor& x, int top, int left, int h, int w);

}  // namespace jndlc
