#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "jndlc/codec/codec.hpp"

namespace jndlc {

nlohmann::json arch_to_json(const ArchDescriptor& arch);
ArchDescriptor arch_from_json(const nlohmann::json& j);

/// Self-describing model file: architecture, every parameter bit, and free-form
/// training metadata (loss config, lambda, seed, epoch, loss statistics).
struct Checkpoint {
  static constexpr std::uint32_t kMagic = 0x4b444e4a;  // "JNDK"
  static constexpr std::uint32_t kVersion = 1;

  CodecParams params;
  nlohmann::json metadata = nlohmann::json::object();

  std::vector<std::uint8_t> serialize() const;
  /// Throws FormatError on bad magic, version, shape or hash mismatch.
  static Checkpoint parse(std::span<const std::uint8_t> bytes);
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace jndlc
