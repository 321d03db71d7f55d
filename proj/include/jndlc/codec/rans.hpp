#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace jndlc::rans {

/// Frequencies are quantized to 16 bits; the 32-bit coder state renormalizes
/// in 16-bit words, keeping it within [2^16, 2^32).
constexpr std::uint32_t kProbBits = 16;
constexpr std::uint32_t kProbScale = 1u << kProbBits;
constexpr std::uint32_t kStateLow = 1u << 16;

struct Symbol {
  std::uint32_t start;
  std::uint32_t freq;
};

/// Buffers symbols, then encodes them in reverse on finish() so the decoder
/// can read forward.
class Encoder {
 public:
  void put(Symbol s);
  void put_bit(bool bit) { put({bit ? kProbScale / 2 : 0u, kProbScale / 2}); }
  std::size_t symbol_count() const { return symbols_.size(); }
  std::vector<std::uint8_t> finish() const;

 private:
  std::vector<Symbol> symbols_;
};

class Decoder {
 public:
  /// Throws DecodeError when the data cannot hold an initial state.
  explicit Decoder(std::span<const std::uint8_t> data);

  /// Cumulative-frequency slot of the next symbol.
  std::uint32_t peek() const { return state_ & (kProbScale - 1); }
  /// Consumes the symbol whose range contains peek().
  void advance(Symbol s);
  bool get_bit();
  /// Throws DecodeError unless the stream ended exactly where the encoder
  /// started (final state and no trailing words).
  void finish() const;

 private:
  std::uint16_t read_word();

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::uint32_t state_ = 0;
};

}  // namespace jndlc::rans
