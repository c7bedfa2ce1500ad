#pragma once

#include <filesystem>
#include <vector>

#include "deepir/tensor.hpp"

namespace deepir {

/// Reads PNG or JPEG (detected from the file signature) as 8-bit RGB.
Image read_image(const std::filesystem::path& path);

/// Writes 8-bit RGB PNG; values are rounded to nearest and clamped to [0, 255].
void write_png(const std::filesystem::path& path, const Image& img);

/// Side-by-side composition, top-aligned, separated by `gap` white columns.
Image hstack(const std::vector<Image>& images, int gap = 4);

}  // namespace deepir
