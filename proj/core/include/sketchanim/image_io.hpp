#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sketchanim/rasterizer.hpp"

namespace sketchanim {

/// 8-bit quantization used by the PNG writer: round(clamp(I, 0, 1) * 255).
std::vector<std::uint8_t> quantize(const RasterImage& image);

void write_png(const std::filesystem::path& path, const RasterImage& image);
void write_png(const std::filesystem::path& path, const RgbImage& image);

/// Loads an 8-bit grayscale or RGB(A) PNG as intensities in [0, 1]; color is
/// reduced to its luma.
RasterImage read_png_gray(const std::filesystem::path& path);

}  // namespace sketchanim
