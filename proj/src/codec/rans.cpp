#include "jndlc/codec/rans.hpp"

#include <algorithm>

#include "jndlc/core/error.hpp"

namespace jndlc::rans {

void Encoder::put(Symbol s) {
  if (s.freq == 0 || s.start + s.freq > kProbScale) throw ArgumentError("rans: invalid symbol range");
  symbols_.push_back(s);
}

std::vector<std::uint8_t> Encoder::finish() const {
  std::vector<std::uint16_t> words;
  std::uint64_t x = kStateLow;
  for (auto it = symbols_.rbegin(); it != symbols_.rend(); ++it) {
    const std::uint64_t x_max = static_cast<std::uint64_t>(it->freq) << (32 - kProbBits);
    while (x >= x_max) {
      words.push_back(static_cast<std::uint16_t>(x & 0xffff));
      x >>= 16;
    }
    x = ((x / it->freq) << kProbBits) + (x % it->freq) + it->start;
  }
  words.push_back(static_cast<std::uint16_t>(x & 0xffff));
  words.push_back(static_cast<std::uint16_t>(x >> 16));
  std::reverse(words.begin(), words.end());
  std::vector<std::uint8_t> out;
  out.reserve(words.size() * 2);
  for (auto w : words) {
    out.push_back(static_cast<std::uint8_t>(w & 0xff));
    out.push_back(static_cast<std::uint8_t>(w >> 8));
  }
  return out;
}

Decoder::Decoder(std::span<const std::uint8_t> data) : data_(data) {
  if (data_.size() % 2 != 0) throw DecodeError("rans: payload length is not a whole number of words");
  const std::uint32_t hi = read_word();
  state_ = (hi << 16) | read_word();
}

std::uint16_t Decoder::read_word() {
  if (pos_ + 2 > data_.size()) throw DecodeError("rans: payload truncated");
  const std::uint16_t w = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
  pos_ += 2;
  return w;
}

void Decoder::advance(Symbol s) {
  std::uint64_t x = static_cast<std::uint64_t>(s.freq) * (state_ >> kProbBits) + peek() - s.start;
  while (x < kStateLow) x = (x << 16) | read_word();
  if (x > 0xffffffffULL) throw DecodeError("rans: state overflow, payload corrupted");
  state_ = static_cast<std::uint32_t>(x);
}

bool Decoder::get_bit() {
  const bool bit = peek() >= kProbScale / 2;
  advance({bit ? kProbScale / 2 : 0u, kProbScale / 2});
  return bit;
}

void Decoder::finish() const {
  if (state_ != kStateLow || pos_ != data_.size()) throw DecodeError("rans: payload corrupted (bad final state)");
}

}  // namespace jndlc::rans
