#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jndlc/codec/entropy_model.hpp"
#include "jndlc/codec/quantizer.hpp"

namespace jndlc {

/// Little-endian container header. Together with the entropy model it fully
/// determines the latent shape to decode.
struct BitstreamHeader {
  static constexpr std::uint32_t kMagic = 0x43444e4a;  // "JNDC"
  static constexpr std::uint16_t kVersion = 1;
  static constexpr std::size_t kSize = 4 + 2 + 7 * 4 + 8 + 4;

  std::uint16_t version = kVersion;
  std::uint32_t batch = 0;
  std::uint32_t image_h = 0;
  std::uint32_t image_w = 0;
  std::uint32_t latent_c = 0;
  std::uint32_t latent_h = 0;
  std::uint32_t latent_w = 0;
  std::uint64_t model_hash = 0;

  bool operator==(const BitstreamHeader&) const = default;
};

struct Bitstream {
  BitstreamHeader header;
  std::vector<std::uint8_t> payload;

  std::vector<std::uint8_t> serialize() const;
  /// Throws FormatError on bad magic, version mismatch or a payload length
  /// that disagrees with the data.
  static Bitstream parse(std::span<const std::uint8_t> bytes);

  std::size_t payload_bits() const { return payload.size() * 8; }
};

/// Per-channel frequency table derived from the entropy model: symbols
/// offset..offset+count-1 plus one trailing escape symbol for values outside
/// that range (escaped values follow as sign + Exp-Golomb bypass bits).
struct ChannelTable {
  int offset = 0;
  std::vector<std::uint32_t> cdf;  // size count + 2, cdf[0] = 0, back() = 2^16

  int symbol_count() const { return static_cast<int>(cdf.size()) - 2; }
  int escape_index() const { return symbol_count(); }
};

/// Deterministic in the entropy-model parameters: the encoder and decoder
/// derive bit-identical tables from identical models.
std::vector<ChannelTable> build_tables(const CumulativeModel& em);

/// `header` supplies image dims and model hash; latent dims are taken from
/// yhat. Throws ModeError for train_noise latents.
Bitstream encode_bitstream(const QuantizedLatent& yhat, const CumulativeModel& em, BitstreamHeader header);
/// Throws FormatError for header/model inconsistencies and DecodeError for
/// truncated or corrupted payloads.
QuantizedLatent decode_bitstream(const Bitstream& bs, const CumulativeModel& em);

}  // namespace jndlc
