#include "jndlc/train/evaluate.hpp"

#include "jndlc/codec/image_codec.hpp"
#include "jndlc/core/error.hpp"

namespace jndlc {

CodedImage code_image(const CodecParams& params, const Tensor& x) {
  const Tensor src = quantize_to_8bit(x);
  CodedImage out;
  out.bitstream = compress_image(src, params);
  out.reconstruction = quantize_to_8bit(decompress_image(out.bitstream, params));
  out.bpp = payload_bpp(out.bitstream);
  out.psnr = psnr(src, out.reconstruction);
  out.msssim = msssim_metric(src, out.reconstruction);
  return out;
}

RDResults evaluate(const std::vector<Checkpoint>& checkpoints, const std::vector<SamplePair>& pairs,
                   const std::string& dataset_id, const std::string& method_id) {
  if (checkpoints.empty()) throw ArgumentError("evaluate: no checkpoints");
  if (pairs.empty()) throw ArgumentError("evaluate: no evaluation images");
  RDResults r;
  r.dataset_id = dataset_id;
  r.method_id = method_id;
  r.notes = {{"padding", "reflect bottom/right to a multiple of the downsampling factor; metrics on the source region"},
             {"reconstruction", "8-bit"},
             {"images", pairs.size()}};
  for (const auto& p : pairs) r.per_image.push_back({p.image_id, {}});
  for (const auto& ck : checkpoints) {
    const double lambda = ck.metadata.contains("lambda") && ck.metadata["lambda"].is_number()
                              ? ck.metadata["lambda"].get<double>()
                              : 0.0;
    RDPoint mean;
    mean.lambda = lambda;
    mean.method_id = method_id;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const CodedImage c = code_image(ck.params, pairs[i].x_o);
      r.per_image[i].points.push_back({c.bpp, c.psnr, c.msssim, lambda, method_id});
      mean.bpp += c.bpp;
      mean.psnr += c.psnr;
      mean.msssim += c.msssim;
    }
    const double n = static_cast<double>(pairs.size());
    mean.bpp /= n;
    mean.psnr /= n;
    mean.msssim /= n;
    r.points.push_back(mean);
  }
  for (const auto& p : pairs) {
    if (p.source != SampleSource::jnd_labeled) continue;
    const Tensor xo = quantize_to_8bit(p.x_o);
    const Tensor xj = quantize_to_8bit(p.x_j);
    r.jnd.push_back(jnd_quality_of_pair(xo, xj, QualityMetric::psnr, p.image_id));
    r.jnd.push_back(jnd_quality_of_pair(xo, xj, QualityMetric::msssim, p.image_id));
  }
  return r;
}

std::vector<SamplePair> load_pairs(const DatasetManifest& m) {
  std::vector<SamplePair> out;
  for (const auto& e : m.entries) out.push_back(load_pair(e));
  return out;
}

}  // namespace jndlc
