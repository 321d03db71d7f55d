#include "jndlc/metrics/rd_results.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jndlc/core/binary_io.hpp"
#include "jndlc/core/error.hpp"
#include "jndlc/core/kv_config.hpp"

namespace jndlc {

using nlohmann::json;

namespace {

json point_to_json(const RDPoint& p) {
  json j;
  j["lambda"] = p.lambda;
  j["bpp"] = p.bpp;
  j["psnr"] = std::isfinite(p.psnr) ? json(p.psnr) : json(nullptr);
  j["msssim"] = p.msssim;
  return j;
}

double number_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw FormatError(std::string("RD results: field '") + key + "' missing or not a number");
  }
  return j.at(key).get<double>();
}

RDPoint point_from_json(const json& j, const std::string& method_id) {
  if (!j.is_object()) throw FormatError("RD results: point is not an object");
  RDPoint p;
  p.method_id = method_id;
  p.lambda = number_field(j, "lambda");
  p.bpp = number_field(j, "bpp");
  p.msssim = number_field(j, "msssim");
  if (j.contains("psnr") && j.at("psnr").is_null()) {
    p.psnr = kInfinitePsnr;
  } else {
    p.psnr = number_field(j, "psnr");
  }
  if (!(p.bpp >= 0.0) || !(p.msssim >= 0.0 && p.msssim <= 1.0)) {
    throw FormatError("RD results: point outside the valid range");
  }
  return p;
}

std::string string_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw FormatError(std::string("RD results: field '") + key + "' missing or not a string");
  }
  return j.at(key).get<std::string>();
}

RDCurve make_curve(const std::vector<RDPoint>& pts, const std::string& method, const std::string& dataset) {
  try {
    return RDCurve(pts, method, dataset);
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("RD results: ") + e.what());
  }
}

}  // namespace

RDCurve RDResults::curve() const { return make_curve(points, method_id, dataset_id); }

RDCurve RDResults::image_curve(const std::string& image_id) const {
  for (const auto& im : per_image) {
    if (im.image_id == image_id) return make_curve(im.points, method_id, dataset_id);
  }
  return RDCurve({}, method_id, dataset_id);
}

json RDResults::to_json() const {
  json j;
  j["dataset_id"] = dataset_id;
  j["method_id"] = method_id;
  j["points"] = json::array();
  for (const auto& p : points) j["points"].push_back(point_to_json(p));
  j["jnd"] = json::array();
  for (const auto& q : jnd) {
    j["jnd"].push_back({{"image_id", q.image_id},
                        {"metric", to_string(q.metric)},
                        {"value", std::isfinite(q.value) ? json(q.value) : json(nullptr)}});
  }
  j["per_image"] = json::array();
  for (const auto& im : per_image) {
    json e;
    e["image_id"] = im.image_id;
    e["points"] = json::array();
    for (const auto& p : im.points) e["points"].push_back(point_to_json(p));
    j["per_image"].push_back(e);
  }
  if (!notes.empty()) j["notes"] = notes;
  return j;
}

RDResults RDResults::from_json(const json& j) {
  if (!j.is_object()) throw FormatError("RD results: top level is not an object");
  RDResults r;
  r.dataset_id = string_field(j, "dataset_id");
  r.method_id = string_field(j, "method_id");
  if (!j.contains("points") || !j.at("points").is_array()) throw FormatError("RD results: 'points' must be an array");
  for (const auto& p : j.at("points")) r.points.push_back(point_from_json(p, r.method_id));
  if (j.contains("jnd")) {
    if (!j.at("jnd").is_array()) throw FormatError("RD results: 'jnd' must be an array");
    for (const auto& e : j.at("jnd")) {
      if (!e.is_object()) throw FormatError("RD results: jnd entry is not an object");
      JNDQuality q;
      q.image_id = string_field(e, "image_id");
      try {
        q.metric = parse_metric(string_field(e, "metric"));
      } catch (const ArgumentError& err) {
        throw FormatError(std::string("RD results: ") + err.what());
      }
      q.value = e.contains("value") && e.at("value").is_null() ? kInfinitePsnr : number_field(e, "value");
      r.jnd.push_back(q);
    }
  }
  if (j.contains("per_image")) {
    if (!j.at("per_image").is_array()) throw FormatError("RD results: 'per_image' must be an array");
    for (const auto& e : j.at("per_image")) {
      if (!e.is_object() || !e.contains("points") || !e.at("points").is_array()) {
        throw FormatError("RD results: malformed per_image entry");
      }
      ImageRD im;
      im.image_id = string_field(e, "image_id");
      for (const auto& p : e.at("points")) im.points.push_back(point_from_json(p, r.method_id));
      r.per_image.push_back(std::move(im));
    }
  }
  if (j.contains("notes")) r.notes = j.at("notes");
  // Points are checked one by one; duplicate rates are legal here and only
  // rejected when a curve is built.
  for (const auto& p : r.points) make_curve({p}, r.method_id, r.dataset_id);
  for (const auto& im : r.per_image) {
    for (const auto& p : im.points) make_curve({p}, r.method_id, r.dataset_id);
  }
  return r;
}

std::string RDResults::to_csv() const {
  std::ostringstream os;
  os << "lambda,bpp,psnr,msssim\n";
  std::vector<RDPoint> sorted = points;
  std::stable_sort(sorted.begin(), sorted.end(), [](const RDPoint& a, const RDPoint& b) { return a.bpp < b.bpp; });
  for (const auto& p : sorted) {
    os << format_double(p.lambda) << ',' << format_double(p.bpp) << ','
       << (std::isfinite(p.psnr) ? format_double(p.psnr) : std::string("inf")) << ',' << format_double(p.msssim)
       << '\n';
  }
  return os.str();
}

RDResults load_results(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw FormatError("RD results '" + path.string() + "': " + e.what());
  }
  return RDResults::from_json(j);
}

void save_results(const std::filesystem::path& path, const RDResults& r, const std::filesystem::path& csv_path) {
  write_text_atomic(path, r.to_json().dump(2) + "\n");
  if (!csv_path.empty()) write_text_atomic(csv_path, r.to_csv());
}

}  // namespace jndlc
