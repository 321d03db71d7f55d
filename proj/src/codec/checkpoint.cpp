#include "jndlc/codec/checkpoint.hpp"

#include <algorithm>
#include <string>

#include "jndlc/core/binary_io.hpp"
#include "jndlc/core/error.hpp"

namespace jndlc {

nlohmann::json arch_to_json(const ArchDescriptor& arch) {
  return {
      {"hidden_channels", arch.hidden_channels},
      {"latent_channels", arch.latent_channels},
      {"downsampling", arch.downsampling},
      {"kernel", arch.kernel},
      {"nonlinearity", to_string(arch.nonlinearity)},
      {"entropy_filters", arch.entropy_filters},
      {"entropy_init_scale", arch.entropy_init_scale},
  };
}

ArchDescriptor arch_from_json(const nlohmann::json& j) {
  try {
    ArchDescriptor a;
    a.hidden_channels = j.at("hidden_channels").get<int>();
    a.latent_channels = j.at("latent_channels").get<int>();
    a.downsampling = j.at("downsampling").get<int>();
    a.kernel = j.at("kernel").get<int>();
    a.nonlinearity = parse_nonlinearity(j.at("nonlinearity").get<std::string>());
    a.entropy_filters = j.at("entropy_filters").get<std::vector<int>>();
    a.entropy_init_scale = j.at("entropy_init_scale").get<double>();
    a.validate();
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid architecture descriptor: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid architecture descriptor: ") + e.what());
  }
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  ByteWriter w;
  w.u32(kMagic);
  w.u32(kVersion);
  w.str(arch_to_json(params.arch).dump());
  w.str(metadata.dump());
  const auto blocks = params.parameter_blocks();
  w.u32(static_cast<std::uint32_t>(blocks.size()));
  for (auto b : blocks) {
    w.u64(b.size());
    for (double v : b) w.f64(v);
  }
  w.u64(params.hash());
  return w.take();
}

Checkpoint Checkpoint::parse(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.u32() != kMagic) throw FormatError("not a jndlc checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                      std::to_string(kVersion) + ")");
  }
  auto read_string = [&r]() {
    const std::uint32_t n = r.u32();
    auto raw = r.raw(n);
    return std::string(raw.begin(), raw.end());
  };
  Checkpoint ck;
  try {
    const auto arch = arch_from_json(nlohmann::json::parse(read_string()));
    ck.params = CodecParams::create(arch, 0);
    ck.metadata = nlohmann::json::parse(read_string());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupted checkpoint metadata: ") + e.what());
  }
  auto blocks = ck.params.parameter_blocks();
  if (r.u32() != blocks.size()) throw FormatError("checkpoint parameter block count does not match architecture");
  for (auto b : blocks) {
    if (r.u64() != b.size()) throw FormatError("checkpoint parameter block size does not match architecture");
    for (auto& v : b) v = r.f64();
  }
  const std::uint64_t stored = r.u64();
  if (stored != ck.params.hash()) throw FormatError("checkpoint hash mismatch (file corrupted)");
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, ckpt.serialize());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return Checkpoint::parse(read_file(path)); }

}  // namespace jndlc
