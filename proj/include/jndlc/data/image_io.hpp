#pragma once

#include <filesystem>

#include "jndlc/core/tensor.hpp"

namespace jndlc {

/// Reads an 8-bit PNG (any colour type, expanded to RGB) or binary PPM (P6,
/// maxval 255) into a [1, 3, H, W] tensor in [0, 1].
/// Throws IoError when unreadable, FormatError for unsupported formats or
/// bit depths, DecodeError for truncated or corrupt data.
Tensor load_image(const std::filesystem::path& path);

/// Writes batch item 0 as 8-bit PNG or PPM, chosen by extension (.png,
/// .ppm). Values are clamped and rounded to the nearest 8-bit level.
void save_image(const Tensor& x, const std::filesystem::path& path);

}  // namespace jndlc
