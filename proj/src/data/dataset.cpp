#include "jndlc/data/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "jndlc/core/binary_io.hpp"
#include "jndlc/core/error.hpp"
#include "jndlc/core/log.hpp"
#include "jndlc/core/rng.hpp"
#include "jndlc/data/image_io.hpp"

namespace jndlc {

using nlohmann::json;

std::string to_string(SampleSource s) { return s == SampleSource::jnd_labeled ? "jnd_labeled" : "unlabeled_proxy"; }

SampleSource parse_source(const std::string& s) {
  if (s == "jnd_labeled") return SampleSource::jnd_labeled;
  if (s == "unlabeled_proxy") return SampleSource::unlabeled_proxy;
  throw FormatError("unknown sample source '" + s + "'");
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  const std::filesystem::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path q(p);
    return q.is_absolute() ? q : base / q;
  };
  DatasetManifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("image_id") || !j.contains("path_o") || !j["image_id"].is_string() ||
        !j["path_o"].is_string()) {
      throw FormatError(where + ": entry needs string fields image_id and path_o");
    }
    ManifestEntry e;
    e.image_id = j["image_id"].get<std::string>();
    e.path_o = resolve(j["path_o"].get<std::string>());
    if (j.contains("path_j") && !j["path_j"].is_null()) {
      if (!j["path_j"].is_string()) throw FormatError(where + ": path_j must be a string");
      e.path_j = resolve(j["path_j"].get<std::string>());
    }
    if (j.contains("source")) {
      if (!j["source"].is_string()) throw FormatError(where + ": source must be a string");
      e.source = parse_source(j["source"].get<std::string>());
    } else {
      e.source = e.path_j ? SampleSource::jnd_labeled : SampleSource::unlabeled_proxy;
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

void DatasetManifest::save(const std::filesystem::path& path) const {
  std::ostringstream os;
  for (const auto& e : entries) {
    json j;
    j["image_id"] = e.image_id;
    j["path_o"] = e.path_o.string();
    if (e.path_j) j["path_j"] = e.path_j->string();
    j["source"] = to_string(e.source);
    os << j.dump() << '\n';
  }
  write_text_atomic(path, os.str());
}

void DatasetManifest::check() const {
  std::set<std::string> ids;
  for (const auto& e : entries) {
    if (!ids.insert(e.image_id).second) throw ConfigError("duplicate image_id '" + e.image_id + "' in manifest");
    if (!std::filesystem::is_regular_file(e.path_o)) throw IoError("missing image '" + e.path_o.string() + "'");
    if (e.source == SampleSource::jnd_labeled) {
      if (!e.path_j) throw ConfigError("labeled entry '" + e.image_id + "' has no path_j");
      if (!std::filesystem::is_regular_file(*e.path_j)) throw IoError("missing image '" + e.path_j->string() + "'");
    }
  }
}

namespace {

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

}  // namespace

ManifestSplit split_manifest(const DatasetManifest& m, double train_fraction, std::uint64_t seed) {
  if (m.empty()) throw ArgumentError("split_manifest: empty manifest");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ArgumentError("split_manifest: train fraction must be in (0, 1), got " + std::to_string(train_fraction));
  }
  std::vector<std::size_t> order(m.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle(order, rng);
  const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(m.size())));
  ManifestSplit out;
  out.train.split = Split::train;
  out.eval.split = Split::eval;
  out.train.seed = out.eval.seed = seed;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? out.train : out.eval).entries.push_back(m.entries[order[i]]);
  }
  return out;
}

std::vector<ManifestEntry> mix_sources(const DatasetManifest& labeled, const DatasetManifest& unlabeled,
                                       std::uint64_t seed) {
  if (labeled.empty()) throw ArgumentError("mix_sources: labeled set is empty");
  Rng rng(seed);
  std::vector<ManifestEntry> stream = labeled.entries;
  for (auto& e : stream) e.source = SampleSource::jnd_labeled;
  const std::size_t n = labeled.size();
  const std::size_t pool = unlabeled.size();
  std::vector<std::size_t> picks;
  if (pool == 0) {
    warn("mix_sources: unlabeled pool is empty; stream contains labeled pairs only");
  } else if (pool < n) {
    warn("mix_sources: unlabeled pool (" + std::to_string(pool) + ") smaller than labeled set (" +
         std::to_string(n) + "); sampling with replacement");
    for (std::size_t i = 0; i < n; ++i) picks.push_back(rng.index(pool));
  } else {
    std::vector<std::size_t> idx(pool);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::swap(idx[i], idx[i + rng.index(pool - i)]);
      picks.push_back(idx[i]);
    }
  }
  for (std::size_t k : picks) {
    ManifestEntry e = unlabeled.entries[k];
    e.source = SampleSource::unlabeled_proxy;
    e.path_j.reset();
    stream.push_back(std::move(e));
  }
  shuffle(stream, rng);
  return stream;
}

SamplePair make_proxy_pair(Tensor x_o, std::string image_id) {
  SamplePair p;
  p.x_j = x_o;
  p.x_o = std::move(x_o);
  p.source = SampleSource::unlabeled_proxy;
  p.image_id = std::move(image_id);
  return p;
}

SamplePair load_pair(const ManifestEntry& e) {
  if (e.source == SampleSource::unlabeled_proxy) return make_proxy_pair(load_image(e.path_o), e.image_id);
  if (!e.path_j) throw ConfigError("labeled entry '" + e.image_id + "' has no path_j");
  SamplePair p;
  p.x_o = load_image(e.path_o);
  p.x_j = load_image(*e.path_j);
  if (!(p.x_o.shape() == p.x_j.shape())) {
    throw ShapeError("entry '" + e.image_id + "': original " + p.x_o.shape().str() + " and JND image " +
                     p.x_j.shape().str() + " differ in size");
  }
  p.source = SampleSource::jnd_labeled;
  p.image_id = e.image_id;
  return p;
}

void PatchSpec::validate(int downsampling) const {
  if (size <= 0) throw ConfigError("patch size must be positive");
  if (downsampling > 0 && size % downsampling != 0) {
    throw ConfigError("patch size " + std::to_string(size) + " is not divisible by the downsampling factor " +
                      std::to_string(downsampling));
  }
  if (patches_per_image < 1) throw ConfigError("patches_per_image must be >= 1");
}

Tensor crop_window(const Tensor& x, int top, int left, int h, int w) {
  const Shape s = x.shape();
  if (top < 0 || left < 0 || top + h > s.h || left + w > s.w) throw ShapeError("crop window outside " + s.str());
  Tensor out({s.n, s.c, h, w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < h; ++y) {
        const double* src = x.plane(n, c) + static_cast<std::size_t>(top + y) * s.w + left;
        std::copy(src, src + w, out.plane(n, c) + static_cast<std::size_t>(y) * w);
      }
    }
  }
  return out;
}

std::vector<SamplePair> extract_aligned_patches(const SamplePair& pair, const PatchSpec& spec) {
  spec.validate(0);
  require_same_shape(pair.x_o, pair.x_j, "extract_aligned_patches");
  const Shape s = pair.x_o.shape();
  std::vector<SamplePair> out;
  if (s.h < spec.size || s.w < spec.size) {
    warn("skipping '" + pair.image_id + "': " + std::to_string(s.h) + "x" + std::to_string(s.w) +
         " is smaller than the " + std::to_string(spec.size) + " patch");
    return out;
  }
  const std::span<const std::uint8_t> id_bytes(reinterpret_cast<const std::uint8_t*>(pair.image_id.data()),
                                               pair.image_id.size());
  Rng rng(derive_seed(spec.seed, fnv1a64(id_bytes)));
  for (int i = 0; i < spec.patches_per_image; ++i) {
    const int top = static_cast<int>(rng.index(static_cast<std::uint64_t>(s.h - spec.size + 1)));
    const int left = static_cast<int>(rng.index(static_cast<std::uint64_t>(s.w - spec.size + 1)));
    SamplePair p;
    p.x_o = crop_window(pair.x_o, top, left, spec.size, spec.size);
    p.x_j = crop_window(pair.x_j, top, left, spec.size, spec.size);
    p.source = pair.source;
    p.image_id = pair.image_id;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace jndlc
