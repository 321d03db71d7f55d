#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "jndlc/core/nn.hpp"
#include "jndlc/core/tensor.hpp"

namespace jndlc {

enum class FeatureProvenance { pretrained, seeded_random };

/// One activation map per tap layer, shallow to deep.
using FeatureStack = std::vector<Tensor>;

/// Frozen VGG-style convolutional feature network
///   conv3x3(3,16) relu conv3x3(16,16) relu* pool conv3x3(16,32) relu* pool conv3x3(32,32) relu*
/// tapped at the starred activations. Inputs are centred (x - 0.5) first.
/// Weights never change after construction; gradients flow to the input only.
class FeatureExtractor {
 public:
  /// He-normal weights from `seed`, zero biases.
  static FeatureExtractor seeded(std::uint64_t seed);
  /// Weights exported from a pretrained backbone in the jndlc feature format.
  static FeatureExtractor load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  struct Record {
    std::vector<Tensor> activations;
  };

  FeatureStack extract(const Tensor& x) const;
  FeatureStack extract(const Tensor& x, Record& record) const;
  /// d L / d x given d L / d(each tap).
  Tensor backward(const Record& record, const std::vector<Tensor>& tap_grads) const;

  std::size_t tap_count() const { return taps_.size(); }
  FeatureProvenance provenance() const { return provenance_; }
  /// "seeded_random:<seed>" or "pretrained:<path>".
  const std::string& id() const { return id_; }

 private:
  FeatureExtractor();

  nn::Sequential net_;
  std::vector<std::size_t> taps_;  // layer indices whose outputs are tapped
  FeatureProvenance provenance_ = FeatureProvenance::seeded_random;
  std::string id_;
};

/// Resolves a feature_extractor_id ("seeded_random:<seed>" or
/// "pretrained:<path>").
std::shared_ptr<const FeatureExtractor> make_feature_extractor(const std::string& id);

}  // namespace jndlc
