#include "jndlc/data/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "jndlc/core/binary_io.hpp"
#include "jndlc/core/error.hpp"

namespace jndlc {

namespace {

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

Tensor from_rgb8(const std::uint8_t* px, int h, int w) {
  Tensor x({1, 3, h, w});
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      const std::uint8_t* p = px + (static_cast<std::size_t>(y) * w + xx) * 3;
      for (int c = 0; c < 3; ++c) x.at(0, c, y, xx) = p[c] / 255.0;
    }
  }
  return x;
}

std::vector<std::uint8_t> to_rgb8(const Tensor& x) {
  const Shape s = x.shape();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(s.h) * s.w * 3);
  for (int y = 0; y < s.h; ++y) {
    for (int xx = 0; xx < s.w; ++xx) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(x.at(0, c, y, xx), 0.0, 1.0);
        out[(static_cast<std::size_t>(y) * s.w + xx) * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return out;
}

Tensor decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw DecodeError("cannot decode PNG '" + name + "': " + msg);
  }
  if (img.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&img);
    throw FormatError("unsupported bit depth in '" + name + "' (only 8-bit images are supported)");
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, px.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw DecodeError("cannot decode PNG '" + name + "': " + msg);
  }
  return from_rgb8(px.data(), static_cast<int>(img.height), static_cast<int>(img.width));
}

void write_png(const Tensor& x, const std::filesystem::path& path) {
  std::vector<std::uint8_t> px = to_rgb8(x);
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(x.shape().w);
  img.height = static_cast<png_uint_32>(x.shape().h);
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, px.data(), 0, nullptr)) {
    throw IoError("cannot encode PNG '" + path.string() + "': " + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, px.data(), 0, nullptr)) {
    throw IoError("cannot encode PNG '" + path.string() + "': " + img.message);
  }
  out.resize(size);
  write_file_atomic(path, out);
}

// Reads one whitespace-delimited header token, skipping comments.
int ppm_token(const std::vector<std::uint8_t>& b, std::size_t& pos, const std::string& name) {
  for (;;) {
    while (pos < b.size() && std::isspace(b[pos])) ++pos;
    if (pos < b.size() && b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= b.size() || !std::isdigit(b[pos])) throw DecodeError("malformed PPM header in '" + name + "'");
  long v = 0;
  while (pos < b.size() && std::isdigit(b[pos])) {
    v = v * 10 + (b[pos++] - '0');
    if (v > (1L << 24)) throw FormatError("PPM dimension too large in '" + name + "'");
  }
  return static_cast<int>(v);
}

Tensor decode_ppm(const std::vector<std::uint8_t>& b, const std::string& name) {
  if (b.size() < 2 || b[0] != 'P' || b[1] != '6') throw FormatError("'" + name + "' is not a binary PPM (P6)");
  std::size_t pos = 2;
  const int w = ppm_token(b, pos, name);
  const int h = ppm_token(b, pos, name);
  const int maxval = ppm_token(b, pos, name);
  if (maxval != 255) {
    throw FormatError("unsupported bit depth in '" + name + "' (maxval " + std::to_string(maxval) + ", need 255)");
  }
  if (w <= 0 || h <= 0) throw DecodeError("PPM '" + name + "' has empty dimensions");
  if (pos >= b.size() || !std::isspace(b[pos])) throw DecodeError("malformed PPM header in '" + name + "'");
  ++pos;
  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (b.size() - pos < need) throw DecodeError("PPM '" + name + "' is truncated");
  return from_rgb8(b.data() + pos, h, w);
}

void write_ppm(const Tensor& x, const std::filesystem::path& path) {
  const std::string header = "P6\n" + std::to_string(x.shape().w) + " " + std::to_string(x.shape().h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const std::vector<std::uint8_t> px = to_rgb8(x);
  out.insert(out.end(), px.begin(), px.end());
  write_file_atomic(path, out);
}

}  // namespace

Tensor load_image(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  const std::string name = path.string();
  static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(kPngSig, kPngSig + 8, bytes.begin())) return decode_png(bytes, name);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes, name);
  throw FormatError("unsupported image format: '" + name + "' (expected 8-bit PNG or P6 PPM)");
}

void save_image(const Tensor& x, const std::filesystem::path& path) {
  require_image(x, "save_image");
  if (x.shape().n != 1) throw ShapeError("save_image expects a single image, got batch " + x.shape().str());
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_png(x, path);
  } else if (ext == ".ppm") {
    write_ppm(x, path);
  } else {
    throw ArgumentError("unsupported output extension '" + ext + "' (use .png or .ppm)");
  }
}

}  // namespace jndlc
