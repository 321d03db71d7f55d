#include "jndlc/codec/image_codec.hpp"

#include <cmath>
#include <sstream>

#include "jndlc/core/error.hpp"

namespace jndlc {

Bitstream compress_image(const Tensor& image, const CodecParams& params) {
  require_image(image, "compress");
  const Tensor padded = reflect_pad(clamp01(image), params.arch.downsampling);
  const QuantizedLatent yhat = quantize(analyze(padded, params), QuantMode::infer_round);
  BitstreamHeader header;
  header.image_h = static_cast<std::uint32_t>(image.shape().h);
  header.image_w = static_cast<std::uint32_t>(image.shape().w);
  header.model_hash = params.hash();
  return encode_bitstream(yhat, params.entropy, header);
}

Tensor decompress_image(const Bitstream& bs, const CodecParams& params) {
  if (bs.header.model_hash != params.hash()) {
    std::ostringstream os;
    os << "bitstream was produced by model " << std::hex << bs.header.model_hash << ", checkpoint is "
       << params.hash();
    throw FormatError(os.str());
  }
  const int s = params.arch.downsampling;
  const auto h = static_cast<int>(bs.header.image_h);
  const auto w = static_cast<int>(bs.header.image_w);
  if (static_cast<int>(bs.header.latent_h) != (h + s - 1) / s ||
      static_cast<int>(bs.header.latent_w) != (w + s - 1) / s) {
    throw FormatError("latent dims in header do not match image dims for downsampling " + std::to_string(s));
  }
  const QuantizedLatent yhat = decode_bitstream(bs, params.entropy);
  return crop(synthesize(yhat, params), h, w);
}

double payload_bpp(const Bitstream& bs) {
  const double pixels = static_cast<double>(bs.header.batch) * bs.header.image_h * bs.header.image_w;
  if (pixels <= 0) throw ArgumentError("bitstream has no pixels");
  return static_cast<double>(bs.payload_bits()) / pixels;
}

Tensor quantize_to_8bit(const Tensor& x) {
  Tensor out = clamp01(x);
  for (auto& v : out.values()) v = std::round(v * 255.0) / 255.0;
  return out;
}

}  // namespace jndlc
