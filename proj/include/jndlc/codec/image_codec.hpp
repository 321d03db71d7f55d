#pragma once

#include "jndlc/codec/bitstream.hpp"
#include "jndlc/codec/codec.hpp"

namespace jndlc {

/// Full inference path: reflect-pad to the downsampling factor, analyze,
/// round, range-code. The header records the unpadded image size.
Bitstream compress_image(const Tensor& image, const CodecParams& params);

/// Inverse of compress_image. Throws FormatError when the bitstream was
/// produced by a different model.
Tensor decompress_image(const Bitstream& bs, const CodecParams& params);

/// Payload bits over source pixels (batch * height * width).
double payload_bpp(const Bitstream& bs);

/// Rounds to the 8-bit grid, as an 8-bit image file would store it.
Tensor quantize_to_8bit(const Tensor& x);

}  // namespace jndlc
