#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "jndlc/metrics/metrics.hpp"

namespace jndlc {

struct ImageRD {
  std::string image_id;
  std::vector<RDPoint> points;
};

/// The interchange format between training, evaluation and the CLI.
/// Infinite PSNR is written as null.
struct RDResults {
  std::string dataset_id;
  std::string method_id;
  std::vector<RDPoint> points;
  std::vector<JNDQuality> jnd;
  std::vector<ImageRD> per_image;
  /// Free-form provenance of the evaluation (padding policy, checkpoints).
  nlohmann::json notes = nlohmann::json::object();

  /// Throws FormatError when the points do not form a valid curve
  /// (duplicate bpp, for instance).
  RDCurve curve() const;
  /// Curve of one image, or an empty curve if the image is absent.
  RDCurve image_curve(const std::string& image_id) const;

  nlohmann::json to_json() const;
  /// Throws FormatError on schema violations.
  static RDResults from_json(const nlohmann::json& j);
  /// `lambda,bpp,psnr,msssim` rows of the aggregate points, by bpp.
  std::string to_csv() const;
};

RDResults load_results(const std::filesystem::path& path);
/// Writes JSON and, when csv_path is non-empty, the CSV mirror.
void save_results(const std::filesystem::path& path, const RDResults& r,
                  const std::filesystem::path& csv_path = {});

}  // namespace jndlc
