#pragma once

#include <string>
#include <vector>

#include "jndlc/codec/bitstream.hpp"
#include "jndlc/codec/checkpoint.hpp"
#include "jndlc/data/dataset.hpp"
#include "jndlc/metrics/rd_results.hpp"

namespace jndlc {

/// Result of pushing one image through the real bitstream.
struct CodedImage {
  Bitstream bitstream;
  /// Decoded image on the 8-bit grid, cropped to the source size.
  Tensor reconstruction;
  /// Payload bits over source pixels.
  double bpp = 0.0;
  double psnr = 0.0;
  double msssim = 0.0;
};

/// compress -> decompress -> 8-bit rounding, with quality measured against
/// `x` (itself rounded to 8 bits first, as if read from an image file).
CodedImage code_image(const CodecParams& params, const Tensor& x);

/// One RD point per checkpoint (lambda from its metadata), averaged over
/// `pairs`; per-image points; and, for labeled pairs, the JND thresholds
/// metric(x_o, x_j) for both metrics.
RDResults evaluate(const std::vector<Checkpoint>& checkpoints, const std::vector<SamplePair>& pairs,
                   const std::string& dataset_id, const std::string& method_id);

/// Loads every manifest entry at full size.
std::vector<SamplePair> load_pairs(const DatasetManifest& m);

}  // namespace jndlc
