#include "jndlc/codec/bitstream.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "jndlc/codec/rans.hpp"
#include "jndlc/core/binary_io.hpp"
#include "jndlc/core/error.hpp"

namespace jndlc {
namespace {

constexpr int kSearchRadius = 2048;
constexpr int kMaxSymbols = 4094;
constexpr double kTailMass = 1e-7;
constexpr std::int64_t kMaxMagnitude = std::int64_t{1} << 30;

std::vector<std::uint32_t> quantize_pmf(const std::vector<double>& pmf) {
  const auto n = static_cast<std::uint32_t>(pmf.size());
  const std::uint32_t budget = rans::kProbScale - n;
  std::vector<std::uint32_t> freq(n);
  std::uint64_t total = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    freq[i] = 1 + static_cast<std::uint32_t>(std::floor(std::clamp(pmf[i], 0.0, 1.0) * budget));
    total += freq[i];
  }
  // Floors leave a remainder; it goes to the most probable symbol.
  const auto top = static_cast<std::size_t>(std::max_element(pmf.begin(), pmf.end()) - pmf.begin());
  if (total <= rans::kProbScale) {
    freq[top] += static_cast<std::uint32_t>(rans::kProbScale - total);
  } else {
    freq[top] -= static_cast<std::uint32_t>(total - rans::kProbScale);
  }
  std::vector<std::uint32_t> cdf(n + 1, 0);
  for (std::uint32_t i = 0; i < n; ++i) cdf[i + 1] = cdf[i] + freq[i];
  return cdf;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffULL) throw ArgumentError(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

void encode_escape(rans::Encoder& enc, std::int64_t v, const ChannelTable& t) {
  const std::int64_t lo = t.offset;
  const std::int64_t hi = t.offset + t.symbol_count() - 1;
  const bool above = v > hi;
  const auto d = static_cast<std::uint64_t>(above ? v - hi - 1 : lo - v - 1) + 1;
  enc.put_bit(above);
  const int nbits = std::bit_width(d) - 1;
  for (int i = 0; i < nbits; ++i) enc.put_bit(true);
  enc.put_bit(false);
  for (int i = nbits - 1; i >= 0; --i) enc.put_bit(((d >> i) & 1u) != 0);
}

std::int64_t decode_escape(rans::Decoder& dec, const ChannelTable& t) {
  const bool above = dec.get_bit();
  int nbits = 0;
  while (dec.get_bit()) {
    if (++nbits > 40) throw DecodeError("escape code too long, payload corrupted");
  }
  std::uint64_t d = 1;
  for (int i = 0; i < nbits; ++i) d = (d << 1) | (dec.get_bit() ? 1u : 0u);
  const auto offset = static_cast<std::int64_t>(d - 1);
  const std::int64_t lo = t.offset;
  const std::int64_t hi = t.offset + t.symbol_count() - 1;
  return above ? hi + 1 + offset : lo - 1 - offset;
}

}  // namespace

std::vector<std::uint8_t> Bitstream::serialize() const {
  ByteWriter w;
  w.u32(BitstreamHeader::kMagic);
  w.u16(header.version);
  w.u32(header.batch);
  w.u32(header.image_h);
  w.u32(header.image_w);
  w.u32(header.latent_c);
  w.u32(header.latent_h);
  w.u32(header.latent_w);
  w.u64(header.model_hash);
  w.u32(checked_u32(payload.size(), "payload length"));
  w.raw(payload);
  return w.take();
}

Bitstream Bitstream::parse(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < BitstreamHeader::kSize) {
    throw FormatError("bitstream shorter than its " + std::to_string(BitstreamHeader::kSize) + "-byte header");
  }
  if (r.u32() != BitstreamHeader::kMagic) throw FormatError("not a jndlc bitstream (bad magic)");
  Bitstream bs;
  bs.header.version = r.u16();
  if (bs.header.version != BitstreamHeader::kVersion) {
    throw FormatError("unsupported bitstream version " + std::to_string(bs.header.version) + " (expected " +
                      std::to_string(BitstreamHeader::kVersion) + ")");
  }
  bs.header.batch = r.u32();
  bs.header.image_h = r.u32();
  bs.header.image_w = r.u32();
  bs.header.latent_c = r.u32();
  bs.header.latent_h = r.u32();
  bs.header.latent_w = r.u32();
  bs.header.model_hash = r.u64();
  const std::uint32_t len = r.u32();
  if (len > r.remaining()) {
    throw DecodeError("payload truncated: header declares " + std::to_string(len) + " bytes, " +
                      std::to_string(r.remaining()) + " present");
  }
  if (len < r.remaining()) throw FormatError("trailing bytes after declared payload");
  auto payload = r.raw(len);
  bs.payload.assign(payload.begin(), payload.end());
  return bs;
}

std::vector<ChannelTable> build_tables(const CumulativeModel& em) {
  std::vector<ChannelTable> tables(static_cast<std::size_t>(em.channels()));
  for (int c = 0; c < em.channels(); ++c) {
    // Smallest k with non-negligible mass at or below it; largest k with
    // non-negligible mass at or above it. Both predicates are monotone in k.
    auto first_true = [](int a, int b, auto pred) {
      while (a < b) {
        const int mid = a + (b - a) / 2;
        if (pred(mid)) {
          b = mid;
        } else {
          a = mid + 1;
        }
      }
      return a;
    };
    int lo = first_true(-kSearchRadius, kSearchRadius, [&](int k) { return em.cdf(c, k + 0.5) >= kTailMass / 2; });
    int hi = first_true(lo, kSearchRadius, [&](int k) { return 1.0 - em.cdf(c, k + 0.5) < kTailMass / 2; });
    if (hi - lo + 1 > kMaxSymbols) {
      const int median = first_true(lo, hi, [&](int k) { return em.cdf(c, k + 0.5) >= 0.5; });
      lo = std::max(lo, median - kMaxSymbols / 2);
      hi = lo + kMaxSymbols - 1;
    }
    std::vector<double> pmf;
    pmf.reserve(static_cast<std::size_t>(hi - lo + 2));
    double covered = 0.0;
    for (int k = lo; k <= hi; ++k) {
      pmf.push_back(em.bin_mass(c, k));
      covered += pmf.back();
    }
    pmf.push_back(std::max(1.0 - covered, 0.0));
    tables[static_cast<std::size_t>(c)] = ChannelTable{lo, quantize_pmf(pmf)};
  }
  return tables;
}

Bitstream encode_bitstream(const QuantizedLatent& yhat, const CumulativeModel& em, BitstreamHeader header) {
  if (yhat.mode != QuantMode::infer_round) {
    throw ModeError("encode_bitstream requires an infer_round latent; got train_noise");
  }
  const Shape& s = yhat.data.shape();
  Bitstream bs;
  bs.header = header;
  bs.header.version = BitstreamHeader::kVersion;
  bs.header.batch = checked_u32(static_cast<std::size_t>(s.n), "batch");
  bs.header.latent_c = checked_u32(static_cast<std::size_t>(s.c), "latent channels");
  bs.header.latent_h = checked_u32(static_cast<std::size_t>(s.h), "latent height");
  bs.header.latent_w = checked_u32(static_cast<std::size_t>(s.w), "latent width");
  if (yhat.data.empty()) return bs;
  if (s.c != em.channels()) {
    throw ShapeError("latent has " + std::to_string(s.c) + " channels, entropy model " +
                     std::to_string(em.channels()));
  }
  const auto tables = build_tables(em);
  rans::Encoder enc;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const ChannelTable& t = tables[static_cast<std::size_t>(c)];
      const double* src = yhat.data.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) {
        const double v = src[i];
        if (v != std::nearbyint(v)) throw ArgumentError("encode_bitstream: latent element is not integer-valued");
        if (std::abs(v) >= static_cast<double>(kMaxMagnitude)) {
          throw NumericError("encode_bitstream: latent magnitude exceeds 2^30");
        }
        const auto k = static_cast<std::int64_t>(v) - t.offset;
        if (k >= 0 && k < t.symbol_count()) {
          enc.put({t.cdf[static_cast<std::size_t>(k)], t.cdf[static_cast<std::size_t>(k) + 1] - t.cdf[static_cast<std::size_t>(k)]});
        } else {
          const auto e = static_cast<std::size_t>(t.escape_index());
          enc.put({t.cdf[e], t.cdf[e + 1] - t.cdf[e]});
          encode_escape(enc, static_cast<std::int64_t>(v), t);
        }
      }
    }
  }
  bs.payload = enc.finish();
  return bs;
}

QuantizedLatent decode_bitstream(const Bitstream& bs, const CumulativeModel& em) {
  if (bs.header.version != BitstreamHeader::kVersion) {
    throw FormatError("unsupported bitstream version " + std::to_string(bs.header.version));
  }
  const Shape s{static_cast<int>(bs.header.batch), static_cast<int>(bs.header.latent_c),
                static_cast<int>(bs.header.latent_h), static_cast<int>(bs.header.latent_w)};
  if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) throw FormatError("latent dims overflow");
  QuantizedLatent out{Tensor(s), QuantMode::infer_round};
  if (s.count() == 0) {
    if (!bs.payload.empty()) throw FormatError("empty latent with non-empty payload");
    return out;
  }
  if (s.c != em.channels()) {
    throw FormatError("bitstream declares " + std::to_string(s.c) + " latent channels, entropy model has " +
                      std::to_string(em.channels()));
  }
  const auto tables = build_tables(em);
  rans::Decoder dec(bs.payload);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const ChannelTable& t = tables[static_cast<std::size_t>(c)];
      double* dst = out.data.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) {
        const std::uint32_t slot = dec.peek();
        const auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), slot);
        const auto k = static_cast<std::size_t>(it - t.cdf.begin()) - 1;
        dec.advance({t.cdf[k], t.cdf[k + 1] - t.cdf[k]});
        if (static_cast<int>(k) == t.escape_index()) {
          dst[i] = static_cast<double>(decode_escape(dec, t));
        } else {
          dst[i] = static_cast<double>(t.offset + static_cast<int>(k));
        }
      }
    }
  }
  dec.finish();
  return out;
}

}  // namespace jndlc
